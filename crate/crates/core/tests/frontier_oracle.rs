use proptest::prelude::*;
use webparf::frontier::{GlobalFrontier, ScoreWeights, UNCLASSIFIED};
use webparf::url_model::canonicalize;
use webparf::DomainProfile;

fn url(i: usize) -> webparf::CanonicalUrl {
    canonicalize(&format!("http://x.test/u{i}")).unwrap()
}

proptest! {
    #[test]
    fn drain_matches_stable_sort(scores in prop::collection::vec(0u64..10, 0..400)) {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        for (i, s) in scores.iter().enumerate() {
            f.enqueue(UNCLASSIFIED, url(i), *s).unwrap();
        }
        let mut oracle: Vec<(u64, usize)> = scores.iter().copied().zip(0..).collect();
        oracle.sort_by_key(|e| std::cmp::Reverse(e.0));
        let mut got = Vec::new();
        while let Some(e) = f.dequeue(UNCLASSIFIED).unwrap() {
            got.push(e.score);
        }
        let want: Vec<u64> = oracle.iter().map(|(s, _)| *s).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn pools_are_independent(ops in prop::collection::vec((0usize..3, 0u64..5), 1..200)) {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        let names = ["a", "b", "c"];
        for n in names {
            f.create_pool(DomainProfile::new(n, ["kw"], vec![]).unwrap()).unwrap();
        }
        let mut per: [Vec<(u64, usize)>; 3] = Default::default();
        for (i, (d, s)) in ops.iter().enumerate() {
            f.enqueue(names[*d], url(i), *s).unwrap();
            per[*d].push((*s, i));
        }
        for (d, mut want) in per.into_iter().enumerate() {
            want.sort_by_key(|e| std::cmp::Reverse(e.0));
            let mut got = Vec::new();
            while let Some(e) = f.dequeue(names[d]).unwrap() {
                got.push(e.url);
            }
            let want: Vec<_> = want.iter().map(|(_, i)| url(*i)).collect();
            prop_assert_eq!(got, want);
        }
        prop_assert!(f.is_empty());
    }

    #[test]
    fn relevance_orders_by_counters(inlinks in prop::collection::vec(0u64..20, 1..50)) {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        for (i, n) in inlinks.iter().enumerate() {
            f.admit(UNCLASSIFIED, url(i), *n, 0).unwrap();
        }
        let mut last = u64::MAX;
        while let Some(e) = f.dequeue(UNCLASSIFIED).unwrap() {
            prop_assert!(e.score <= last);
            prop_assert_eq!(e.score, e.inlink_count);
            last = e.score;
        }
    }
}

#[test]
fn thousand_by_hundred() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        let scores: Vec<u64> = (0..1000).map(|_| rng.random_range(0..=9)).collect();
        for (i, s) in scores.iter().enumerate() {
            f.enqueue(UNCLASSIFIED, url(i), *s).unwrap();
        }
        let mut idx: Vec<usize> = (0..1000).collect();
        idx.sort_by(|a, b| scores[*b].cmp(&scores[*a]));
        for i in idx {
            assert_eq!(f.dequeue(UNCLASSIFIED).unwrap().unwrap().url, url(i));
        }
        assert!(f.dequeue(UNCLASSIFIED).unwrap().is_none());
    }
}
