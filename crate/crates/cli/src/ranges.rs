//! Parsing of grid range specifications: `start:end:log`, `start:end:lin`,
//! or a single integer.

pub fn parse(spec: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let v = single
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid range value `{spec}`"))?;
            if v == 0 {
                return Err("range values must be >= 1".into());
            }
            Ok(vec![v])
        }
        [start, end, scale] => {
            let lo = start.trim().parse::<usize>().map_err(|_| format!("bad start in `{spec}`"))?;
            let hi = end.trim().parse::<usize>().map_err(|_| format!("bad end in `{spec}`"))?;
            if lo == 0 || hi < lo {
                return Err(format!("range `{spec}` must satisfy 1 <= start <= end"));
            }
            match scale.trim() {
                "log" => {
                    let mut values = Vec::new();
                    let mut v = lo;
                    loop {
                        values.push(v);
                        match v.checked_mul(2) {
                            Some(next) if next <= hi => v = next,
                            _ => break,
                        }
                    }
                    Ok(values)
                }
                "lin" => Ok((lo..=hi).collect()),
                other => Err(format!("unknown range scale `{other}` (use log or lin)")),
            }
        }
        _ => Err(format!("range `{spec}` must be VALUE or START:END:SCALE")),
    }
}

#[cfg(test)]
mod tests {
    use super::parse;

    #[test]
    fn single_value() {
        assert_eq!(parse("7").unwrap(), vec![7]);
        assert!(parse("0").is_err());
    }

    #[test]
    fn log_range_doubles() {
        assert_eq!(parse("2:1024:log").unwrap().len(), 10);
        assert_eq!(parse("2:10:log").unwrap(), vec![2, 4, 8]);
    }

    #[test]
    fn lin_range() {
        assert_eq!(parse("3:6:lin").unwrap(), vec![3, 4, 5, 6]);
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse("2:4").is_err());
        assert!(parse("4:2:log").is_err());
        assert!(parse("2:4:cubic").is_err());
    }
}
