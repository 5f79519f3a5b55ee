use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use cyclecast_core::ingest::{
    aggregate_trips, calendar_aggregates, split_train_test, DailySeries, DateWindow, TripRecord,
};

fn start() -> NaiveDate {
    "2017-01-01".parse().unwrap()
}

proptest! {
    #[test]
    fn aggregation_conserves_passengers(trips in prop::collection::vec((0i64..20 * 24 * 60, 0u32..7), 1..300)) {
        let window = DateWindow::new(start(), start() + Duration::days(19)).unwrap();
        let records: Vec<TripRecord> = trips
            .iter()
            .map(|&(m, c)| TripRecord::new(start().and_hms_opt(0, 0, 0).unwrap() + Duration::minutes(m), c))
            .collect();
        let expected: u64 = trips.iter().map(|&(_, c)| u64::from(c)).sum();
        let agg = aggregate_trips(records, window).unwrap();
        prop_assert_eq!(agg.series.total(), expected);
        prop_assert_eq!(agg.series.len(), 20);
    }

    #[test]
    fn split_rejoins_exactly(counts in prop::collection::vec(0u64..1_000_000, 2..400), frac in 0.01f64..0.99) {
        let s = DailySeries::new(start(), counts.clone()).unwrap();
        let holdout = ((counts.len() as f64 * frac) as usize).clamp(1, counts.len() - 1);
        let split = split_train_test(&s, holdout).unwrap();
        prop_assert_eq!(split.test.len(), holdout);
        prop_assert_eq!(split.rejoin(), s);
    }

    #[test]
    fn calendar_totals_agree(counts in prop::collection::vec(0u64..1_000_000, 1..800)) {
        let s = DailySeries::new(start(), counts).unwrap();
        let r = calendar_aggregates(&s, 5);
        prop_assert_eq!(r.grand_total, s.total());
        prop_assert_eq!(r.yearly.values().sum::<u64>(), s.total());
        prop_assert_eq!(r.monthly.values().sum::<u64>(), s.total());
        prop_assert_eq!(r.weekday.iter().map(|(_, v)| v).sum::<u64>(), s.total());
    }
}
