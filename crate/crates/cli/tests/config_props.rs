use dlalab_cli::config::{parse_config, Raw, RunConfig};
use proptest::prelude::*;
use serde_json::Value;

fn train_flags() -> impl Strategy<Value = Vec<(&'static str, Raw)>> {
    (
        2u64..=10,
        prop::sample::select(vec!["open", "closed"]),
        prop::sample::select(vec!["sps", "ran", "SPSA"]),
        0u64..5000,
        1e-6f64..10.0,
        -5.0f64..0.0,
        1e-3f64..5.0,
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(n, b, a, epochs, a0, lo, width, seed, clip)| {
            let mut v = vec![
                ("train.n", Raw::Flag(n.to_string())),
                ("train.boundary", Raw::Flag(b.into())),
                ("train.algo", Raw::Flag(a.into())),
                ("train.epochs", Raw::Flag(epochs.to_string())),
                ("train.a0", Raw::Flag(format!("{a0}"))),
                ("train.init_low", Raw::Flag(format!("{lo}"))),
                ("train.init_high", Raw::Flag(format!("{}", lo + width))),
                ("seed", Raw::Flag(seed.to_string())),
            ];
            if clip {
                v.push(("train.theta_clip", Raw::Switch));
            }
            v
        })
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(flags in train_flags()) {
        let cfg = parse_config("train", flags, vec![]).unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back.to_json(), cfg.to_json());
    }

    #[test]
    fn flags_and_equivalent_file_agree(epochs in 0u64..1000, delta in 1e-6f64..0.999) {
        let flags = vec![("bounds.m", Raw::Flag(epochs.max(1).to_string())), ("bounds.delta", Raw::Flag(format!("{delta}")))];
        let file = vec![
            ("bounds.m".to_string(), Value::from(epochs.max(1))),
            ("bounds.delta".to_string(), Value::from(delta)),
        ];
        let a = parse_config("bound eval", flags, vec![]).unwrap();
        let b = parse_config("bound eval", vec![], file).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn out_of_domain_delta_is_rejected(delta in prop_oneof![-10.0f64..=0.0, 1.0f64..10.0]) {
        let r = parse_config("bound eval", vec![("bounds.delta", Raw::Flag(format!("{delta}")))], vec![]);
        prop_assert_eq!(r.unwrap_err().exit_code(), 3);
    }
}
