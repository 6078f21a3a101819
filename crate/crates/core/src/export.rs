//! Fixed-format CSV output.

use std::io::Write;

use crate::error::Result;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_row<S: AsRef<str>>(w: &mut impl Write, fields: &[S]) -> Result<()> {
    let line = fields.iter().map(|f| f.as_ref()).collect::<Vec<_>>().join(",");
    writeln!(w, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_roundtrips() {
        for x in [0.1, -7.0 / 6.0, 1e-300, 123456789.12345679, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn rows_are_comma_joined() {
        let mut buf = Vec::new();
        write_row(&mut buf, &["a", "b"]).unwrap();
        assert_eq!(buf, b"a,b\n");
    }
}
