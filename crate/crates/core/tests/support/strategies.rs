//! Proptest strategies shared by the property and acceptance tests.

use proptest::prelude::*;

use spellcast::catalog::{TagFilter, Tags};
use spellcast::geo::{Coordinate, EARTH_RADIUS_M};
use spellcast::{Spell, SpellBook, SpellKind};

pub fn coord() -> impl Strategy<Value = Coordinate> {
    (-180.0f64..180.0, -90.0f64..=90.0).prop_map(|(lon, lat)| Coordinate::new(lon, lat).unwrap())
}

/// The point `d` meters from `c` along bearing `theta`, by the spherical
/// direct formula.
pub fn destination(c: Coordinate, theta: f64, d: f64) -> Coordinate {
    let delta = d / EARTH_RADIUS_M;
    let (phi1, lam1) = (c.lat().to_radians(), c.lon().to_radians());
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
    let lam2 = lam1 + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    Coordinate::wrapping(lam2.to_degrees(), phi2.to_degrees().clamp(-90.0, 90.0)).unwrap()
}

pub fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("mall".to_string()),
        Just("and".to_string()),
        Just("NOT".to_string()),
        Just("fast food".to_string()),
        Just("a\"b\\c".to_string()),
        Just("".to_string()),
        "[a-z_][a-z0-9_:.-]{0,6}",
    ]
}

/// Keys are never empty; the grammar has no way to write one.
pub fn key() -> impl Strategy<Value = String> {
    prop_oneof![Just("fclass".to_string()), word().prop_filter("non-empty", |w| !w.is_empty())]
}

pub fn filter_ast() -> impl Strategy<Value = TagFilter> {
    let leaf = prop_oneof![
        1 => Just(TagFilter::Any),
        6 => (key(), word()).prop_map(|(k, v)| TagFilter::eq(k, v)),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(TagFilter::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| l.and(r)),
            (inner.clone(), inner).prop_map(|(l, r)| l.or(r)),
        ]
    })
}

pub fn tag_map() -> impl Strategy<Value = Tags> {
    proptest::collection::btree_map(key(), word(), 0..4)
}

pub fn spell(i: usize) -> impl Strategy<Value = Spell> {
    (0usize..3, 1e-3f64..1e6, filter_ast(), "[a-z]{1,8}").prop_map(move |(k, extent, filter, layer)| {
        let kind = match k {
            0 => SpellKind::DistanceToNearest { cap_m: extent },
            1 => SpellKind::NumberOf { radius_m: extent },
            _ => SpellKind::LengthOf { radius_m: extent },
        };
        Spell { kind, filter, layer, feature_name: format!("feature_{i}") }
    })
}

pub fn book() -> impl Strategy<Value = SpellBook> {
    (0usize..6, "\\PC{0,20}", "\\PC{0,40}").prop_flat_map(|(n, author, description)| {
        let spells: Vec<_> = (0..n).map(spell).collect();
        spells.prop_map(move |spells| SpellBook::new(spells).with_metadata(author.clone(), description.clone()))
    })
}
