//! JSON emission with floats at 17 significant digits, so artifacts compare
//! bitwise across runs and parse to the same doubles in any language.

use serde::Serialize;
use serde_json::ser::Formatter;
use std::io;

#[derive(Default)]
struct SciFloatFormatter;

impl Formatter for SciFloatFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        debug_assert!(value.is_finite(), "non-finite value in JSON output");
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.7e}")
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFloatFormatter);
    value
        .serialize(&mut ser)
        .expect("report serialization is infallible");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_digits_and_round_trip() {
        #[derive(Serialize)]
        struct S {
            v: f64,
        }
        let s = to_json_string(&S { v: 0.4 });
        assert_eq!(s, "{\"v\":4.0000000000000002e-1}\n");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["v"].as_f64().unwrap(), 0.4);
    }
}
