use acf_core::{Grid, GridField};
use acf_lab::config::Config;
use acf_lab::io::{read_field, write_field};
use proptest::prelude::*;

fn field() -> impl Strategy<Value = GridField> {
    (2usize..=3, 3usize..7, -5.0f64..5.0, 0.01f64..1.0).prop_flat_map(|(dim, n, o, h)| {
        let len = n.pow(dim as u32);
        prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, len).prop_map(move |vals| {
            let g = Grid::new(vec![o; dim], h, vec![n; dim]).unwrap();
            GridField::new(g, vals).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn acf1_roundtrip_is_bitwise(f in field()) {
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let g = read_field(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(g.grid().counts(), f.grid().counts());
        prop_assert_eq!(g.grid().origin(), f.grid().origin());
        prop_assert_eq!(g.grid().spacing().to_bits(), f.grid().spacing().to_bits());
        let bits = |x: &GridField| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&g), bits(&f));
    }

    #[test]
    fn acf1_truncation_is_an_error(f in field(), cut in 1usize..64) {
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        buf.truncate(buf.len().saturating_sub(cut));
        prop_assert!(read_field(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn config_canonical_form_reparses(entries in prop::collection::btree_map("[a-z]{1,6}(\\.[a-z]{1,6})?", "[a-z0-9.,]{1,8}", 1..8)) {
        let pairs: Vec<(&str, &str)> = entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let c = Config::from_pairs(&pairs);
        let again = Config::parse(&c.canonical()).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.provenance_hash(), c.provenance_hash());
    }
}
