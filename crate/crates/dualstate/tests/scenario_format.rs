use dualstate::{parse_scenario, serialize_scenario};
use dualstate_core::hilbert::{CMatrix, C64};
use dualstate_core::model::{
    HamiltonianSpec, InputKind, InteractionSchedule, MeasurementScenario, MeasurementSource, ScheduleStep,
};
use proptest::prelude::*;

fn amplitudes() -> impl Strategy<Value = Vec<C64>> {
    (2usize..5)
        .prop_flat_map(|n| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n))
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            v.into_iter().map(|(a, b)| C64::new(a / norm, b / norm)).collect()
        })
}

fn scenario() -> impl Strategy<Value = MeasurementScenario> {
    (
        amplitudes(),
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec(0.1f64..2.0, 1..5),
        prop::option::of(prop::collection::vec(-2.0f64..2.0, 4)),
    )
        .prop_map(|(a, mixed, pair, gaps, diag)| {
            let mut s = if pair {
                let mut s = MeasurementScenario::two_observer(a);
                s.observers[1].source = MeasurementSource::Observer("O".into());
                s
            } else {
                MeasurementScenario::single_observer(a)
            };
            s.input_kind = if mixed { InputKind::Mixed } else { InputKind::Pure };
            let mut t = s.schedule.steps.last().unwrap().t_end;
            let mut steps = s.schedule.steps.clone();
            for g in gaps {
                steps.push(ScheduleStep::free(t, t + g));
                t += g;
            }
            s.schedule = InteractionSchedule::new(steps);
            if let Some(d) = diag {
                let n = s.outcome_count();
                let entries: Vec<C64> = (0..n).map(|i| C64::new(d[i % 4], 0.0)).collect();
                s.free_hamiltonian = Some(HamiltonianSpec::on_factor("S", CMatrix::diagonal(&entries)));
            }
            s
        })
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(s in scenario()) {
        let text = serialize_scenario(&s).unwrap();
        let back = parse_scenario(&text).unwrap();
        prop_assert_eq!(&back, &s);
        let again = parse_scenario(&serialize_scenario(&back).unwrap()).unwrap();
        prop_assert_eq!(again, back);
    }

    #[test]
    fn off_norm_amplitudes_are_rejected(scale in 1.01f64..3.0) {
        let s = MeasurementScenario::single_observer(vec![C64::new(0.6 * scale, 0.0), C64::new(0.8, 0.0)]);
        let text = serialize_scenario(&s).unwrap();
        prop_assert_eq!(parse_scenario(&text).unwrap_err().code, dualstate::ErrorCode::Norm);
    }
}
