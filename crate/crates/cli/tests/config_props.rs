use poldqc_cli::RunConfig;
use poldqc_core::dqc::FrequencyAxis;
use poldqc_core::model::SurfaceVariant;
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = SurfaceVariant> {
    prop_oneof![
        Just(SurfaceVariant::Full),
        Just(SurfaceVariant::Linear),
        Just(SurfaceVariant::Etc),
        Just(SurfaceVariant::FieldFree),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_text_round_trips(
        lambda0 in 0.0..0.1f64,
        n_mol in 1usize..=2,
        slope in 0.01..2.0f64,
        gamma in 0.5..50.0f64,
        r_points in 16usize..256,
        qc in (-80.0..-10.0f64, 10.0..80.0f64),
        start in 3000.0..9000.0f64,
        step in 0.1..5.0f64,
        n in 2usize..800,
        threshold in 0.001..0.999f64,
        v in variant(),
    ) {
        let c = RunConfig {
            lambda0_au: lambda0,
            n_mol,
            slope_au: slope,
            gamma_cm: gamma,
            r_points,
            qc_min_au: qc.0,
            qc_max_au: qc.1,
            omega2: FrequencyAxis::new(start, step, n).unwrap(),
            threshold,
            variant: v,
            ..RunConfig::default()
        };
        let text = c.to_text();
        let back = RunConfig::parse_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
    }
}
