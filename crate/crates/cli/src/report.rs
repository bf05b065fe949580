//! Condition reports: every sufficient condition evaluated on one state,
//! rendered either as grouped text or as a flat JSON object.

use keyrate::blockstate::{BellDiagonalShieldState, BlockState};
use keyrate::distill::{check_corollary1, check_theorem1};
use keyrate::format::sig;
use keyrate::opalg::Tolerances;
use keyrate::privstate::pbit_certificate;
use keyrate::squeeze::check_theorem2;
use serde_json::{Map, Number, Value};

/// Entries of `ρ^Γ − ρ` below this count as PT-invariant.
pub const PT_INVARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Text(String),
    Number(f64),
    Count(u64),
    Flag(bool),
    Verdict(Verdict),
    Missing,
}

impl Field {
    fn to_json(&self) -> Value {
        match self {
            Field::Text(s) => Value::String(s.clone()),
            Field::Number(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Field::Count(n) => Value::Number((*n).into()),
            Field::Flag(b) => Value::Bool(*b),
            Field::Verdict(v) => Value::String(v.as_str().into()),
            Field::Missing => Value::Null,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Field::Text(s) => s.clone(),
            Field::Number(x) => sig(*x, 12),
            Field::Count(n) => n.to_string(),
            Field::Flag(b) => if *b { "yes" } else { "no" }.into(),
            Field::Verdict(v) => v.as_str().into(),
            Field::Missing => "n/a".into(),
        }
    }
}

/// Ordered `section.name → value` entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionReport {
    entries: Vec<(String, Field)>,
}

impl ConditionReport {
    fn push(&mut self, key: &str, value: Field) {
        self.entries.push((key.to_string(), value));
    }

    fn num(&mut self, key: &str, x: f64) {
        self.push(key, Field::Number(x));
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn verdict(&self, key: &str) -> Option<Verdict> {
        match self.get(key) {
            Some(Field::Verdict(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Field::Number(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[(String, Field)] {
        &self.entries
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        serde_json::to_string_pretty(&Value::Object(map)).expect("serialisable") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in &self.entries {
            let (head, name) = key.split_once('.').unwrap_or(("", key.as_str()));
            if head != section {
                out.push_str(&format!("[{head}]\n"));
                section = head;
            }
            let indent = if head.is_empty() { "" } else { "  " };
            out.push_str(&format!("{indent}{name}: {}\n", value.to_text()));
        }
        out
    }
}

/// Evaluates every condition on `state`; `epsilon` feeds the round estimate.
pub fn build_report(state: &BlockState, source: &str, epsilon: f64) -> keyrate::Result<ConditionReport> {
    let mut r = ConditionReport::default();
    r.push("source", Field::Text(source.to_string()));
    let dims = state.dims();
    r.push("shield_dims", Field::Text(format!("{}x{}", dims.alice, dims.bob)));

    let v = state.validate();
    r.push("validation.valid", Field::Flag(v.is_valid()));
    r.num("validation.hermiticity_residual", v.hermiticity_residual);
    r.num("validation.trace_deviation", v.trace_deviation);
    r.num("validation.min_eigenvalue", v.min_eigenvalue);

    let ppt = state.ppt_check()?;
    let pt_gap = state.partial_transpose_bb().max_abs_diff(&state.to_dense());
    r.push("ppt.verdict", Field::Verdict(Verdict::from_bool(ppt.psd)));
    r.num("ppt.min_eigenvalue", ppt.min_eigenvalue);
    r.push("ppt.pt_invariant", Field::Flag(pt_gap <= PT_INVARIANCE_TOL));

    let t1 = check_theorem1(state)?;
    r.push("theorem1.verdict", Field::Verdict(Verdict::from_bool(t1.holds)));
    let n = t1.norms;
    for (name, x) in [
        ("a0000", n.a0000),
        ("a0101", n.a0101),
        ("a1010", n.a1010),
        ("a1111", n.a1111),
        ("a0011", n.a0011),
        ("a0110", n.a0110),
    ] {
        r.num(&format!("theorem1.norm_{name}"), x);
    }
    r.num("theorem1.epsilon", epsilon);
    r.push(
        "theorem1.rounds_for_eps",
        t1.rounds_for(epsilon).map_or(Field::Missing, |k| Field::Count(k.into())),
    );

    match BellDiagonalShieldState::from_block_state(state, &Tolerances::DEFAULT) {
        Some(b) => {
            let c = check_corollary1(&b)?;
            r.push("corollary1.verdict", Field::Verdict(Verdict::from_bool(c.holds)));
            r.num("corollary1.diff_norm", c.diff_norm);
            r.num("corollary1.sum_norm", c.sum_norm);
            r.num("corollary1.overlap", c.overlap);
        }
        None => {
            r.push("corollary1.verdict", Field::Verdict(Verdict::NotApplicable));
        }
    }

    let t2 = check_theorem2(state)?;
    let s = t2.summary;
    r.push("theorem2.verdict", Field::Verdict(Verdict::from_bool(t2.holds)));
    r.num("theorem2.x", s.x);
    r.num("theorem2.y", s.y);
    r.num("theorem2.z", s.z);
    r.num("theorem2.w", s.w);
    r.num("theorem2.S_E", s.s_e);
    r.num("theorem2.K_DW_bound", t2.k_dw_bound());

    let cert = pbit_certificate(state)?;
    r.num("pbit_certificate.epsilon", cert.epsilon);
    r.push("pbit_certificate.delta", cert.delta.map_or(Field::Missing, Field::Number));
    r.push("pbit_certificate.valid", Field::Flag(cert.valid));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use keyrate::blockstate::ShieldDims;
    use keyrate::families::{example2, example4, Ex2Params, Ex34Params};
    use keyrate::random::random_block_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example4_report_verdicts() {
        let state = example4(&Ex34Params::default()).unwrap();
        let r = build_report(&state, "test", 1e-3).unwrap();
        assert_eq!(r.verdict("ppt.verdict"), Some(Verdict::Holds));
        assert_eq!(r.verdict("theorem1.verdict"), Some(Verdict::Holds));
        assert_eq!(r.verdict("theorem2.verdict"), Some(Verdict::Fails));
        assert_eq!(r.get("theorem1.rounds_for_eps"), Some(&Field::Count(31)));
    }

    #[test]
    fn example2_report() {
        let state = example2(&Ex2Params::default()).unwrap();
        let r = build_report(&state, "test", 1e-3).unwrap();
        assert_eq!(r.verdict("theorem2.verdict"), Some(Verdict::Holds));
        assert_eq!(r.verdict("corollary1.verdict"), Some(Verdict::Holds));
        assert!((r.number("theorem2.K_DW_bound").unwrap() - 0.18872187554086717).abs() < 1e-9);
    }

    #[test]
    fn generic_state_has_no_corollary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = random_block_state(ShieldDims::new(1, 2).unwrap(), &mut rng);
        let r = build_report(&state, "test", 1e-3).unwrap();
        assert_eq!(r.verdict("corollary1.verdict"), Some(Verdict::NotApplicable));
        assert_eq!(r.verdict("theorem1.verdict"), Some(Verdict::Fails));
        assert_eq!(r.get("theorem1.rounds_for_eps"), Some(&Field::Missing));
    }

    #[test]
    fn renderings_share_keys() {
        let state = example4(&Ex34Params::default()).unwrap();
        let r = build_report(&state, "test", 1e-3).unwrap();
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["ppt.verdict"], "holds");
        assert_eq!(json.as_object().unwrap().len(), r.entries().len());
        let text = r.to_text();
        assert!(text.contains("[theorem2]\n  verdict: fails\n"), "{text}");
    }
}
