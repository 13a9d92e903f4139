use crate::CliError;

/// `a..b` (inclusive), `a..b:step`, `a,b,c` or a single value.
pub fn parse_range(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("malformed range '{text}'"));
    let text = text.trim();
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((h, st)) => (h, st.trim().parse::<u32>().map_err(|_| bad())?),
            None => (rest, 1),
        };
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if step == 0 || lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

/// `start:ratio:terms`, each term rounded to the nearest integer; terms must be distinct.
pub fn parse_geometric(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("malformed geometric range '{text}': {why}"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, ratio, terms] = parts.as_slice() else {
        return Err(bad("expected start:ratio:terms"));
    };
    let start: f64 = start.parse().map_err(|_| bad("start"))?;
    let ratio: f64 = ratio.parse().map_err(|_| bad("ratio"))?;
    let terms: u32 = terms.parse().map_err(|_| bad("terms"))?;
    if !(start >= 1.0 && ratio > 1.0 && ratio.is_finite()) || terms == 0 {
        return Err(bad("need start >= 1, ratio > 1 and terms >= 1"));
    }
    let mut out: Vec<u32> = Vec::new();
    for i in 0..terms {
        let v = (start * ratio.powi(i as i32)).round();
        if v > f64::from(u32::MAX) {
            return Err(bad("term overflows"));
        }
        let v = v as u32;
        if out.last() == Some(&v) {
            return Err(bad("terms must be distinct"));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_range("8..20:4").unwrap(), vec![8, 12, 16, 20]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert_eq!(parse_range("3, 5,9").unwrap(), vec![3, 5, 9]);
        for bad in ["", "4..2", "1..5:0", "a..b", "1..", "x"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn geometric() {
        assert_eq!(parse_geometric("8:2:6").unwrap(), vec![8, 16, 32, 64, 128, 256]);
        assert_eq!(parse_geometric("10:1.5:3").unwrap(), vec![10, 15, 23]);
        assert!(parse_geometric("8:1:3").is_err());
        assert!(parse_geometric("1:1.1:5").is_err());
        assert!(parse_geometric("8:2").is_err());
    }
}
