//! Parsers for compound flag values: comma lists, `id:weight` pairs,
//! `A-B-C` system names.

use saltdens::{Error, Result};

fn bad(label: &str, message: String) -> Error {
    Error::Config(format!("{label}: {message}"))
}

/// Unwraps a flag that is only optional because it belongs to another mode.
pub fn require<T>(value: Option<T>, flag: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("{context} requires {flag}")))
}

pub fn usize_list(label: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(str::trim)
        .map(|tok| {
            tok.parse().map_err(|_| {
                bad(label, format!("expected comma-separated integers, got {tok:?}"))
            })
        })
        .collect()
}

pub fn f64_list(label: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .map(|tok| {
            tok.parse()
                .map_err(|_| bad(label, format!("expected comma-separated numbers, got {tok:?}")))
        })
        .collect()
}

pub fn id_list(label: &str, raw: &str) -> Result<Vec<String>> {
    let ids: Vec<String> = raw.split(',').map(|tok| tok.trim().to_string()).collect();
    if ids.iter().any(String::is_empty) {
        return Err(bad(label, format!("empty component id in {raw:?}")));
    }
    Ok(ids)
}

/// `LiF-NaF-ZrF4,KCl-LiCl-LiF` -> one id list per system.
pub fn systems(label: &str, raw: &str) -> Result<Vec<Vec<String>>> {
    raw.split(',')
        .map(|sys| {
            let ids: Vec<String> = sys.split('-').map(|tok| tok.trim().to_string()).collect();
            if ids.len() < 2 || ids.iter().any(String::is_empty) {
                return Err(bad(label, format!("expected ids joined by `-`, got {sys:?}")));
            }
            Ok(ids)
        })
        .collect()
}

/// `LiF:0.7` -> one id with an attached number.
pub fn pinned(label: &str, raw: &str) -> Result<(String, f64)> {
    let parsed = raw.split_once(':').and_then(|(id, value)| {
        let id = id.trim();
        let value: f64 = value.trim().parse().ok()?;
        (!id.is_empty()).then(|| (id.to_string(), value))
    });
    parsed.ok_or_else(|| bad(label, format!("expected `id:number`, got {raw:?}")))
}

/// `NaF:2,LiF:3` -> ids with attached numbers.
pub fn weighted(label: &str, raw: &str) -> Result<Vec<(String, f64)>> {
    raw.split(',').map(|tok| pinned(label, tok)).collect()
}

/// `BeF2,ZrF4` -> exactly two ids.
pub fn pair(label: &str, raw: &str) -> Result<(String, String)> {
    let ids = id_list(label, raw)?;
    let [a, b] = <[String; 2]>::try_from(ids)
        .map_err(|_| bad(label, format!("expected exactly two ids, got {raw:?}")))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_split_on_commas_and_trim() {
        assert_eq!(usize_list("w", "128, 64,32").unwrap(), vec![128, 64, 32]);
        assert_eq!(f64_list("x", "0.6, 0.4").unwrap(), vec![0.6, 0.4]);
        assert_eq!(id_list("c", "LiF, NaF").unwrap(), vec!["LiF", "NaF"]);
        assert!(usize_list("w", "128,x").is_err());
        assert!(id_list("c", "LiF,,NaF").is_err());
    }

    #[test]
    fn systems_split_on_dashes() {
        let parsed = systems("s", "LiF-NaF-ZrF4,KCl-LiCl").unwrap();
        assert_eq!(parsed, vec![vec!["LiF", "NaF", "ZrF4"], vec!["KCl", "LiCl"]]);
        assert!(systems("s", "LiF").is_err());
        assert!(systems("s", "LiF--NaF").is_err());
    }

    #[test]
    fn weighted_ids_carry_their_numbers() {
        assert_eq!(pinned("f", "LiF:0.7").unwrap(), ("LiF".to_string(), 0.7));
        assert_eq!(
            weighted("o", "NaF:2, LiF:3").unwrap(),
            vec![("NaF".to_string(), 2.0), ("LiF".to_string(), 3.0)]
        );
        assert!(pinned("f", "LiF").is_err());
        assert!(pinned("f", ":0.7").is_err());
        assert!(pinned("f", "LiF:x").is_err());
    }

    #[test]
    fn pairs_need_exactly_two_ids() {
        assert_eq!(pair("p", "BeF2,ZrF4").unwrap(), ("BeF2".to_string(), "ZrF4".to_string()));
        assert!(pair("p", "BeF2").is_err());
        assert!(pair("p", "A,B,C").is_err());
    }

    #[test]
    fn require_names_the_missing_flag() {
        assert_eq!(require(Some(3), "--n", "sweep").unwrap(), 3);
        let err = require::<usize>(None, "--n", "sweep").unwrap_err();
        assert!(err.to_string().contains("--n"));
    }
}
