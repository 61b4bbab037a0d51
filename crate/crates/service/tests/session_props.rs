use std::collections::BTreeMap;

use ontoclean_core::eval::load_benchmark;
use ontoclean_core::labeler::{LabelingResult, LlmConfig, PromptConfig, PromptStrategy, Representation};
use ontoclean_core::{check_all, LabelSet, Labeling, MetaProperty, Sign};
use ontoclean_service::session::{MergeMode, Provenance, Session};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Human {
        class: usize,
        property: usize,
        value: Option<usize>,
    },
    Machine {
        seed: Vec<(usize, usize, usize)>,
        overwrite: bool,
    },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..29usize, 0..4usize, proptest::option::of(0..3usize)).prop_map(|(class, property, value)| Op::Human {
            class,
            property,
            value
        }),
        (
            proptest::collection::vec((0..29usize, 0..4usize, 0..3usize), 0..40),
            any::<bool>()
        )
            .prop_map(|(seed, overwrite)| Op::Machine { seed, overwrite }),
    ]
}

fn legal(p: MetaProperty, v: usize) -> Sign {
    let vals: &[Sign] = if p.allows_anti() {
        &[Sign::Plus, Sign::Minus, Sign::Anti]
    } else {
        &[Sign::Plus, Sign::Minus]
    };
    vals[v % vals.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn human_values_survive_any_run_sequence(ops in proptest::collection::vec(op(), 1..25)) {
        let b = load_benchmark("pizza").unwrap();
        let mut s = Session::new("p", b.taxonomy.clone(), Some(b.gold)).unwrap();
        let pc = PromptConfig::new(PromptStrategy::ZeroShot, Representation::Flat);
        let lc = LlmConfig::fixture("/unused");
        let mut human: BTreeMap<(String, MetaProperty), Sign> = BTreeMap::new();

        for op in ops {
            match op {
                Op::Human { class, property, value } => {
                    let c = b.taxonomy.class(class).to_string();
                    let p = MetaProperty::ALL[property];
                    let v = value.map(|v| legal(p, v));
                    s.set_label(&c, p, v).unwrap();
                    match v {
                        Some(v) => { human.insert((c, p), v); }
                        None => { human.remove(&(c, p)); }
                    }
                }
                Op::Machine { seed, overwrite } => {
                    let mut labeling = Labeling::new();
                    for (class, property, value) in seed {
                        let id = b.taxonomy.class(class);
                        let p = MetaProperty::ALL[property];
                        let mut ls = labeling.get(id.as_str()).copied().unwrap_or_else(LabelSet::default);
                        ls.set(p, Some(legal(p, value))).unwrap();
                        labeling.insert(id.clone(), ls);
                    }
                    let result = LabelingResult { labeling, warnings: vec![], raw_response: String::new(), attempts: 1 };
                    let mode = if overwrite { MergeMode::Overwrite } else { MergeMode::FillMissing };
                    s.apply_labels(&result, mode, &pc, &lc).unwrap();
                }
            }
            for ((c, p), v) in &human {
                prop_assert_eq!(s.labeling.value(c, *p), Some(*v));
                prop_assert_eq!(s.provenance_of(c, *p), Some(Provenance::Human));
            }
            prop_assert_eq!(&s.violations, &check_all(&s.taxonomy, &s.labeling).unwrap());
            // Every stored value has a provenance entry and vice versa.
            let values: usize = s.labeling.iter().map(|(_, ls)| ls.values().count()).sum();
            let tagged: usize = s.provenance.values().map(BTreeMap::len).sum();
            prop_assert_eq!(values, tagged);
        }
        let back = Session::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }
}
