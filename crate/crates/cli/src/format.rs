//! Byte-stable rendering: pretty JSON with every float at 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Renders a finite float with exactly 17 significant digits, positional for
/// decimal exponents in `[-5, 16]` and scientific otherwise.
pub fn float17(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent present") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

struct Formatter17 {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for Formatter17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(float17(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Formatter17 {
            pretty: PrettyFormatter::new(),
        },
    );
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(float17(0.3125), "0.31250000000000000");
        assert_eq!(float17(-0.2907877024514202), "-0.29078770245142022");
        assert_eq!(float17(0.0), "0.0000000000000000");
        assert_eq!(float17(-0.0), "0.0000000000000000");
        assert_eq!(float17(1.0), "1.0000000000000000");
        assert_eq!(float17(12345.0), "12345.000000000000");
        assert_eq!(float17(1e-7), "9.9999999999999995e-8");
        assert_eq!(float17(2.5e20), "2.5000000000000000e20");
        assert_eq!(float17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn round_trips_exactly() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02e23,
            0.19737758803394834,
            1e-5,
            9.999999999999999e16,
        ] {
            let s = float17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            let json: f64 = serde_json::from_str(&to_json(&v)).unwrap();
            assert_eq!(json, v);
        }
    }

    #[test]
    fn pretty_layout() {
        #[derive(Serialize)]
        struct T {
            a: f64,
            b: Vec<f64>,
        }
        let s = to_json(&T {
            a: 0.5,
            b: vec![1.0],
        });
        assert_eq!(
            s,
            "{\n  \"a\": 0.50000000000000000,\n  \"b\": [\n    1.0000000000000000\n  ]\n}\n"
        );
    }
}
