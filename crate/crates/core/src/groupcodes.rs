//! Group-covariant codes over finite groups: repetition-style and
//! quantum-double-style constructions, transversal-gate verification, and
//! exact erasure-correctability checks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codespace::{Backing, ChargeSpec, CovariantCode, PhysCharge, SparseState};
use crate::noise::reduced_family;
use crate::numkit::{sparse_trace_norm, C64};
use crate::{Error, Result};

/// A finite group given by its Cayley table. Associativity is verified
/// exhaustively for orders up to 24 and by seeded sampling beyond.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroup {
    pub order: usize,
    /// `table[a][b]` is the index of `a * b`.
    pub table: Vec<Vec<usize>>,
    #[serde(skip)]
    pub identity: usize,
    #[serde(skip)]
    pub inverse: Vec<usize>,
}

impl FiniteGroup {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        for row in &table {
            if row.len() != n || row.iter().any(|&v| v >= n) {
                return Err(Error::InvalidGroup("malformed Cayley table".into()));
            }
        }
        // Identity: the unique e with e*a = a*e = a for all a.
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {a} has no inverse")))?;
            inverse[a] = inv;
        }
        if n <= 24 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if table[table[a][b]][c] != table[a][table[b][c]] {
                            return Err(Error::InvalidGroup(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6172);
            for _ in 0..20_000 {
                let (a, b, c) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(Error::InvalidGroup(format!(
                        "associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
        Ok(FiniteGroup {
            order: n,
            table,
            identity,
            inverse,
        })
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(Error::Serde)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FiniteGroup =
            serde_json::from_str(text).map_err(Error::Serde)?;
        FiniteGroup::new(raw.table)
    }
}

/// The built-in groups covering every construction exercised here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinGroup {
    /// Cyclic group of order `n`.
    Zn(usize),
    /// Symmetric group on three letters (order 6, non-abelian).
    S3,
    /// Dihedral group of the square (order 8).
    D4,
    /// Quaternion group (order 8).
    Q8,
}

pub fn builtin_group(name: BuiltinGroup) -> Result<FiniteGroup> {
    let table = match name {
        BuiltinGroup::Zn(n) => {
            if n == 0 {
                return Err(Error::InvalidGroup("Z0 is not a group".into()));
            }
            (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
        }
        BuiltinGroup::S3 => {
            // Elements are permutations of {0,1,2} in lexicographic order.
            let perms: Vec<[usize; 3]> = vec![
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
            perms
                .iter()
                .map(|a| {
                    perms
                        .iter()
                        .map(|b| index([a[b[0]], a[b[1]], a[b[2]]]))
                        .collect()
                })
                .collect()
        }
        BuiltinGroup::D4 => {
            // r^a s^b with a mod 4, b mod 2, index a + 4b; s r = r^{-1} s.
            let idx = |a: usize, b: usize| (a % 4) + 4 * (b % 2);
            let mut table = vec![vec![0usize; 8]; 8];
            for a in 0..4 {
                for b in 0..2 {
                    for c in 0..4 {
                        for d in 0..2 {
                            let e = if b == 0 { (a + c) % 4 } else { (a + 4 - c % 4) % 4 };
                            table[idx(a, b)][idx(c, d)] = idx(e, b + d);
                        }
                    }
                }
            }
            table
        }
        BuiltinGroup::Q8 => {
            // Index = axis + 4*sign with axes (1, i, j, k).
            let mul = |x: usize, y: usize| -> usize {
                let (ax, sx) = (x % 4, x / 4);
                let (ay, sy) = (y % 4, y / 4);
                // Quaternion axis products with result sign.
                let prod = [
                    [(0, 0), (1, 0), (2, 0), (3, 0)],
                    [(1, 0), (0, 1), (3, 0), (2, 1)],
                    [(2, 0), (3, 1), (0, 1), (1, 0)],
                    [(3, 0), (2, 0), (1, 1), (0, 1)],
                ];
                let (axis, s) = prod[ax][ay];
                axis + 4 * ((sx + sy + s) % 2)
            };
            (0..8).map(|a| (0..8).map(|b| mul(a, b)).collect()).collect()
        }
    };
    FiniteGroup::new(table)
}

/// Which side a multiplier permutation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The permutation of group labels effected by multiplication with `g`.
pub fn multiplier(group: &FiniteGroup, g: usize, side: Side) -> Result<Vec<usize>> {
    if g >= group.order {
        return Err(Error::InvalidArgument(format!(
            "element {g} out of range for order {}",
            group.order
        )));
    }
    Ok((0..group.order)
        .map(|h| match side {
            Side::Left => group.mul(g, h),
            Side::Right => group.mul(h, g),
        })
        .collect())
}

/// A covariant code whose physical labels index group elements.
#[derive(Debug, Clone)]
pub struct GroupCode {
    pub group: FiniteGroup,
    pub code: CovariantCode,
}

fn charge_spec_for(group: &FiniteGroup, name: BuiltinGroup, columns: &[SparseState], n: usize) -> ChargeSpec {
    // Cyclic groups carry an honest modular charge (the label itself); the
    // logical charge is read off the first stored ket of each column.
    if let BuiltinGroup::Zn(m) = name {
        let logical: Vec<f64> = columns
            .iter()
            .map(|col| {
                let labels = col.terms.keys().next().unwrap();
                let total: i64 = labels.iter().sum();
                (total.rem_euclid(m as i64)) as f64
            })
            .collect();
        return ChargeSpec {
            logical,
            physical: vec![PhysCharge::Label; n],
            nu: 0.0,
            modulus: Some(m as i64),
        };
    }
    let _ = group;
    ChargeSpec {
        logical: vec![0.0; columns.len()],
        physical: vec![PhysCharge::Zero; n],
        nu: 0.0,
        modulus: None,
    }
}

fn assemble(
    group: &FiniteGroup,
    name: BuiltinGroup,
    family: &str,
    params: serde_json::Value,
    columns: Vec<SparseState>,
    n: usize,
) -> GroupCode {
    let charge = charge_spec_for(group, name, &columns, n);
    GroupCode {
        group: group.clone(),
        code: CovariantCode {
            family: family.into(),
            params,
            backing: Backing::Explicit(columns),
            charge,
            n_subsystems: n,
            truncation_mass: 0.0,
            warnings: vec![],
        },
    }
}

/// `|g> -> |g, g, ..., g>` on `m` subsystems.
pub fn bitflip_code(name: BuiltinGroup, m: usize) -> Result<GroupCode> {
    let group = builtin_group(name)?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one subsystem".into()));
    }
    let columns = (0..group.order)
        .map(|g| SparseState::from_terms(m, vec![(vec![g as i64; m], C64::new(1.0, 0.0))]))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        &group,
        name,
        "group-bitflip",
        serde_json::json!({"order": group.order, "m": m}),
        columns,
        m,
    ))
}

/// `|g> -> |G|^{-(m-1)/2} sum over tuples with product g`.
pub fn phaseflip_code(name: BuiltinGroup, m: usize) -> Result<GroupCode> {
    let group = builtin_group(name)?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one subsystem".into()));
    }
    let amp = (group.order as f64).powi(-((m as i32) - 1)).sqrt();
    let mut columns = Vec::with_capacity(group.order);
    for g in 0..group.order {
        let mut terms = Vec::new();
        // Enumerate the first m-1 labels; the last is forced.
        let mut tuple = vec![0usize; m];
        loop {
            let mut prefix = group.identity;
            for &t in &tuple[..m - 1] {
                prefix = group.mul(prefix, t);
            }
            tuple[m - 1] = group.mul(group.inv(prefix), g);
            terms.push((
                tuple.iter().map(|&v| v as i64).collect(),
                C64::new(amp, 0.0),
            ));
            // Odometer over the first m-1 positions.
            let mut k = 0;
            loop {
                if k == m - 1 {
                    break;
                }
                tuple[k] += 1;
                if tuple[k] < group.order {
                    break;
                }
                tuple[k] = 0;
                k += 1;
            }
            if k == m - 1 {
                break;
            }
        }
        columns.push(SparseState::from_terms(m, terms)?);
    }
    Ok(assemble(
        &group,
        name,
        "group-phaseflip",
        serde_json::json!({"order": group.order, "m": m}),
        columns,
        m,
    ))
}

/// `|g1,g2> -> |G|^{-1/2} sum_g |g, g^{-1} g1, g g2, g^{-1} g1 g2>`.
pub fn code_422(name: BuiltinGroup) -> Result<GroupCode> {
    let group = builtin_group(name)?;
    let n = group.order;
    let amp = 1.0 / (n as f64).sqrt();
    let mut columns = Vec::with_capacity(n * n);
    for g1 in 0..n {
        for g2 in 0..n {
            let mut terms = Vec::with_capacity(n);
            for g in 0..n {
                let gi = group.inv(g);
                let a = group.mul(gi, g1);
                let b = group.mul(g, g2);
                let c = group.mul(a, g2);
                terms.push((
                    vec![g as i64, a as i64, b as i64, c as i64],
                    C64::new(amp, 0.0),
                ));
            }
            columns.push(SparseState::from_terms(4, terms)?);
        }
    }
    Ok(assemble(
        &group,
        name,
        "group-422",
        serde_json::json!({"order": n}),
        columns,
        4,
    ))
}

/// The stabilized `[[2m, 2m-2, 2]]_G` construction: base ket
/// `h_{2i} = g_{2i-2} g_{2i-1}`, `h_{2i+1} = g_{2i} g_{2i-1}` with
/// `g_0 = g_{2m-1} = e`, symmetrized by the diagonal left action.
/// Stabilizer invariance and the telescoping parity of every stored ket are
/// verified during construction.
pub fn code_2m(name: BuiltinGroup, m: usize) -> Result<GroupCode> {
    let group = builtin_group(name)?;
    if m < 2 {
        return Err(Error::InvalidArgument(
            "the stabilized family needs at least four subsystems (m >= 2)".into(),
        ));
    }
    let n_sub = 2 * m;
    let k = 2 * m - 2;
    let ord = group.order;
    let amp = 1.0 / (ord as f64).sqrt();
    let d_l = ord.pow(k as u32);
    let mut columns = Vec::with_capacity(d_l);
    let mut logicals = vec![0usize; k];
    loop {
        // g with 1-based indices, g[0] = g[2m-1] = identity.
        let mut g = vec![group.identity; 2 * m];
        g[1..=k].copy_from_slice(&logicals);
        let mut base = vec![group.identity; n_sub];
        for p in 2..=n_sub {
            base[p - 1] = if p % 2 == 0 {
                group.mul(g[p - 2], g[p - 1])
            } else {
                group.mul(g[p - 1], g[p - 2])
            };
        }
        // Telescoping parity h1^{-1} h2 h3^{-1} h4 ... = e.
        let mut acc = group.identity;
        for (i, &h) in base.iter().enumerate() {
            let factor = if i % 2 == 0 { group.inv(h) } else { h };
            acc = group.mul(acc, factor);
        }
        if acc != group.identity {
            return Err(Error::InvalidGroup(
                "telescoping parity violated by the base ket".into(),
            ));
        }
        let mut terms = Vec::with_capacity(ord);
        for s in 0..ord {
            terms.push((
                base.iter().map(|&h| group.mul(s, h) as i64).collect(),
                C64::new(amp, 0.0),
            ));
        }
        columns.push(SparseState::from_terms(n_sub, terms)?);
        // Odometer over logical tuple.
        let mut pos = 0;
        loop {
            if pos == k {
                break;
            }
            logicals[pos] += 1;
            if logicals[pos] < ord {
                break;
            }
            logicals[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    let gc = assemble(
        &group,
        name,
        "group-2m-stabilized",
        serde_json::json!({"order": ord, "m": m}),
        columns,
        n_sub,
    );
    // Stabilizer invariance: the diagonal left action permutes the terms of
    // every column onto themselves.
    let cols = match &gc.code.backing {
        Backing::Explicit(c) => c,
        _ => unreachable!(),
    };
    for l in 0..ord {
        for col in cols {
            for (labels, a) in &col.terms {
                let image: Vec<i64> = labels
                    .iter()
                    .map(|&h| group.mul(l, h as usize) as i64)
                    .collect();
                match col.terms.get(&image) {
                    Some(b) if (a - b).norm() < 1e-12 => {}
                    _ => {
                        return Err(Error::InvalidGroup(
                            "stabilizer invariance violated".into(),
                        ))
                    }
                }
            }
        }
    }
    Ok(gc)
}

/// `[[4,2,2]]_G` with the diagonal stabilizer: the `m = 2` member of the
/// stabilized family.
pub fn code_422_stabilized(name: BuiltinGroup) -> Result<GroupCode> {
    code_2m(name, 2)
}

/// Largest norm, over logical basis states, of the difference between the
/// transversally acted codeword and the codeword of the expected logical
/// image. `physical[i]` permutes the labels of subsystem `i`; `expected`
/// permutes logical indices.
pub fn verify_transversal_logical(
    code: &CovariantCode,
    physical: &[Vec<usize>],
    expected: &[usize],
) -> Result<f64> {
    let cols = code.columns().ok_or_else(|| {
        Error::InvalidArgument("transversal check needs explicit codewords".into())
    })?;
    if physical.len() != code.n_subsystems {
        return Err(Error::DimensionMismatch(format!(
            "{} permutations for {} subsystems",
            physical.len(),
            code.n_subsystems
        )));
    }
    if expected.len() != cols.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} logical images for {} codewords",
            expected.len(),
            cols.len()
        )));
    }
    let mut worst = 0.0f64;
    for (x, col) in cols.iter().enumerate() {
        let target = &cols[expected[x]];
        let mut diff: HashMap<Vec<i64>, C64> = target
            .terms
            .iter()
            .map(|(l, a)| (l.clone(), -a))
            .collect();
        for (labels, a) in &col.terms {
            let image: Vec<i64> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let l = l as usize;
                    if l >= physical[i].len() {
                        return -1i64;
                    }
                    physical[i][l] as i64
                })
                .collect();
            if image.contains(&-1) {
                return Err(Error::InvalidArgument(
                    "permutation does not cover a stored label".into(),
                ));
            }
            *diff.entry(image).or_insert(C64::new(0.0, 0.0)) += a;
        }
        let norm: f64 = diff.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(norm);
    }
    Ok(worst)
}

/// Exact erasure-correctability check: over a complete matrix-unit basis on
/// the erased set, the codeword Gram data must look like
/// `delta_{x,x'} * c(O)`. Returns the largest deviation.
pub fn verify_kl_erasure(code: &CovariantCode, alpha: &[usize], max_dim: usize) -> Result<f64> {
    let fam = reduced_family(code, alpha)?;
    let dim = fam.dim();
    if dim > max_dim {
        return Err(Error::BudgetExceeded {
            got: dim,
            budget: max_dim,
        });
    }
    let d_l = code.d_l();
    // Matrix-unit expectation values are exactly the reduced-operator
    // entries; the logical-independent part c is their diagonal average.
    let mut c: HashMap<(usize, usize), C64> = HashMap::new();
    for x in 0..d_l {
        for &(r, s, v) in fam.entries(x, x) {
            *c.entry((r, s)).or_insert(C64::new(0.0, 0.0)) += v / d_l as f64;
        }
    }
    // Deviation per logical pair is measured in trace norm, so correlated
    // small entries (as in non-abelian phase codes) register at full weight.
    let mut violation = 0.0f64;
    for x in 0..d_l {
        for xp in 0..d_l {
            let mut dev: HashMap<(usize, usize), C64> = HashMap::new();
            for &(r, s, v) in fam.entries(x, xp) {
                dev.insert((r, s), v);
            }
            if x == xp {
                for (&key, &cv) in &c {
                    *dev.entry(key).or_insert(C64::new(0.0, 0.0)) -= cv;
                }
            }
            let entries: Vec<(usize, usize, C64)> =
                dev.into_iter().map(|((r, s), v)| (r, s, v)).collect();
            violation = violation.max(sparse_trace_norm(&entries, dim));
        }
    }
    Ok(violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codespace::five_qudit_perfect;

    #[test]
    fn builtin_groups_are_sane() {
        let z2 = builtin_group(BuiltinGroup::Zn(2)).unwrap();
        assert_eq!(z2.order, 2);
        assert!(z2.is_abelian());
        let s3 = builtin_group(BuiltinGroup::S3).unwrap();
        assert_eq!(s3.order, 6);
        assert!(!s3.is_abelian());
        let d4 = builtin_group(BuiltinGroup::D4).unwrap();
        assert_eq!(d4.order, 8);
        assert!(!d4.is_abelian());
        let q8 = builtin_group(BuiltinGroup::Q8).unwrap();
        assert_eq!(q8.order, 8);
        assert!(!q8.is_abelian());
        for g in 0..q8.order {
            assert_eq!(q8.mul(g, q8.inv(g)), q8.identity);
        }
        // Q8 has a unique element of order 2 (-1), unlike D4.
        let order2 = |grp: &FiniteGroup| {
            (0..grp.order)
                .filter(|&g| g != grp.identity && grp.mul(g, g) == grp.identity)
                .count()
        };
        assert_eq!(order2(&q8), 1);
        assert_eq!(order2(&d4), 5);
    }

    #[test]
    fn bad_tables_are_rejected() {
        // A left-translation table that is not associative.
        let t = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 1, 0]];
        assert!(FiniteGroup::new(t).is_err());
        assert!(FiniteGroup::new(vec![vec![1]]).is_err());
    }

    #[test]
    fn group_json_round_trip() {
        let s3 = builtin_group(BuiltinGroup::S3).unwrap();
        let text = s3.to_json().unwrap();
        let back = FiniteGroup::from_json(&text).unwrap();
        assert_eq!(back, s3);
        assert_eq!(back.identity, s3.identity);
    }

    #[test]
    fn multipliers_compose_and_commute_across_sides() {
        let s3 = builtin_group(BuiltinGroup::S3).unwrap();
        let e = multiplier(&s3, s3.identity, Side::Left).unwrap();
        assert_eq!(e, (0..6).collect::<Vec<_>>());
        for g in 0..6 {
            let l = multiplier(&s3, g, Side::Left).unwrap();
            let li = multiplier(&s3, s3.inv(g), Side::Left).unwrap();
            for h in 0..6 {
                assert_eq!(li[l[h]], h);
            }
            for hh in 0..6 {
                let r = multiplier(&s3, hh, Side::Right).unwrap();
                for h in 0..6 {
                    // Left and right translations always commute.
                    assert_eq!(l[r[h]], r[l[h]]);
                }
            }
        }
    }

    #[test]
    fn bitflip_is_repetition() {
        let gc = bitflip_code(BuiltinGroup::Zn(2), 3).unwrap();
        assert_eq!(gc.code.d_l(), 2);
        let cols = gc.code.columns().unwrap();
        assert_eq!(cols[1].terms.keys().next().unwrap(), &vec![1, 1, 1]);
        assert!(gc.code.verify_isometry() < 1e-12);
        let (_, viol) = gc.code.verify_covariance();
        assert_eq!(viol, 0.0);
    }

    #[test]
    fn phaseflip_term_counts_and_orthonormality() {
        let gc = phaseflip_code(BuiltinGroup::Zn(2), 3).unwrap();
        let cols = gc.code.columns().unwrap();
        assert_eq!(cols[0].terms.len(), 4);
        for labels in cols[0].terms.keys() {
            assert_eq!(labels.iter().sum::<i64>() % 2, 0);
        }
        assert!(gc.code.verify_isometry() < 1e-12);
        let s3 = phaseflip_code(BuiltinGroup::S3, 3).unwrap();
        assert_eq!(s3.code.columns().unwrap()[0].terms.len(), 36);
        assert!(s3.code.verify_isometry() < 1e-12);
    }

    #[test]
    fn code_422_dimensions_and_isometry() {
        for name in [BuiltinGroup::Zn(2), BuiltinGroup::Zn(3), BuiltinGroup::S3] {
            let gc = code_422(name).unwrap();
            assert_eq!(gc.code.d_l(), gc.group.order * gc.group.order);
            assert_eq!(gc.code.n_subsystems, 4);
            assert!(gc.code.verify_isometry() < 1e-12);
            let (_, viol) = gc.code.verify_covariance();
            assert_eq!(viol, 0.0);
        }
    }

    #[test]
    fn code_422_z2_is_the_standard_four_two_two() {
        // Distance 2: every single erasure is correctable, and the code has
        // 4 codewords on 4 qubits.
        let gc = code_422(BuiltinGroup::Zn(2)).unwrap();
        assert_eq!(gc.code.d_l(), 4);
        for site in 0..4 {
            let v = verify_kl_erasure(&gc.code, &[site], 4096).unwrap();
            assert!(v < 1e-12, "site {site}: {v}");
        }
        // Not distance 3: some pair erasure fails.
        let mut worst_pair = 0.0f64;
        for a in 0..4 {
            for b in (a + 1)..4 {
                worst_pair = worst_pair.max(verify_kl_erasure(&gc.code, &[a, b], 4096).unwrap());
            }
        }
        assert!(worst_pair > 0.1);
    }

    #[test]
    fn code_422_single_erasures_pass_kl_with_uniform_c() {
        let gc = code_422(BuiltinGroup::Zn(3)).unwrap();
        for site in 0..4 {
            assert!(verify_kl_erasure(&gc.code, &[site], 4096).unwrap() < 1e-12);
        }
        // The logical-independent constant on the first subsystem is the
        // maximally mixed one: diagonal entries tr(O)/|G|.
        let fam = reduced_family(&gc.code, &[0]).unwrap();
        for x in 0..gc.code.d_l() {
            for &(r, s, v) in fam.entries(x, x) {
                if r == s {
                    assert!((v.re - 1.0 / 3.0).abs() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn phaseflip_fails_erasure() {
        let gc = phaseflip_code(BuiltinGroup::Zn(2), 3).unwrap();
        let v = verify_kl_erasure(&gc.code, &[0], 4096).unwrap();
        assert!(v > 0.1, "{v}");
    }

    #[test]
    fn stabilized_family_matches_at_m_two() {
        let a = code_422_stabilized(BuiltinGroup::Zn(2)).unwrap();
        let b = code_2m(BuiltinGroup::Zn(2), 2).unwrap();
        assert_eq!(a.code.columns().unwrap(), b.code.columns().unwrap());
        assert_eq!(a.code.d_l(), 4);
        assert!(a.code.verify_isometry() < 1e-12);
    }

    #[test]
    fn stabilized_codes_correct_all_single_erasures() {
        for name in [BuiltinGroup::Zn(2), BuiltinGroup::Zn(3), BuiltinGroup::S3] {
            for m in [2usize, 3] {
                let gc = code_2m(name, m).unwrap();
                assert_eq!(gc.code.d_l(), gc.group.order.pow(2 * m as u32 - 2));
                assert!(gc.code.verify_isometry() < 1e-12);
                for site in 0..2 * m {
                    let v = verify_kl_erasure(&gc.code, &[site], 4096).unwrap();
                    assert!(v < 1e-12, "{name:?} m={m} site {site}: {v}");
                }
            }
        }
    }

    #[test]
    fn odd_half_length_is_refused() {
        assert!(code_2m(BuiltinGroup::Zn(2), 1).is_err());
    }

    #[test]
    fn transversal_left_action_on_422() {
        let gc = code_422(BuiltinGroup::S3).unwrap();
        let ord = gc.group.order;
        let identity: Vec<usize> = (0..ord).collect();
        for l in 0..ord {
            let left = multiplier(&gc.group, l, Side::Left).unwrap();
            // Left action on subsystems 0 and 2 sends |g1, g2> to |l g1, g2>.
            let physical = vec![left.clone(), identity.clone(), left.clone(), identity.clone()];
            let expected: Vec<usize> = (0..ord * ord)
                .map(|x| {
                    let (g1, g2) = (x / ord, x % ord);
                    gc.group.mul(l, g1) * ord + g2
                })
                .collect();
            let r = verify_transversal_logical(&gc.code, &physical, &expected).unwrap();
            assert!(r < 1e-12, "l={l}: {r}");
        }
    }

    #[test]
    fn transversal_right_action_on_422() {
        let gc = code_422(BuiltinGroup::S3).unwrap();
        let ord = gc.group.order;
        let identity: Vec<usize> = (0..ord).collect();
        for l in 0..ord {
            let right = multiplier(&gc.group, l, Side::Right).unwrap();
            // Right action on subsystems 2 and 3 sends |g1, g2> to |g1, g2 l>.
            let physical = vec![identity.clone(), identity.clone(), right.clone(), right];
            let expected: Vec<usize> = (0..ord * ord)
                .map(|x| {
                    let (g1, g2) = (x / ord, x % ord);
                    g1 * ord + gc.group.mul(g2, l)
                })
                .collect();
            let r = verify_transversal_logical(&gc.code, &physical, &expected).unwrap();
            assert!(r < 1e-12, "l={l}: {r}");
        }
    }

    #[test]
    fn transversal_action_on_stabilized_422() {
        let gc = code_422_stabilized(BuiltinGroup::S3).unwrap();
        let ord = gc.group.order;
        let identity: Vec<usize> = (0..ord).collect();
        for l in 0..ord {
            let right = multiplier(&gc.group, l, Side::Right).unwrap();
            // I (x) right (x) right (x) I sends |g1, g2> to |g1 l, g2>.
            let physical = vec![identity.clone(), right.clone(), right, identity.clone()];
            // The stabilized family enumerates logical tuples with g1 as the
            // least-significant digit.
            let expected: Vec<usize> = (0..ord * ord)
                .map(|x| {
                    let (g1, g2) = (x % ord, x / ord);
                    gc.group.mul(g1, l) + g2 * ord
                })
                .collect();
            let r = verify_transversal_logical(&gc.code, &physical, &expected).unwrap();
            assert!(r < 1e-12, "l={l}: {r}");
        }
    }

    #[test]
    fn identity_gate_has_zero_residual() {
        let gc = code_422(BuiltinGroup::Zn(3)).unwrap();
        let id: Vec<usize> = (0..3).collect();
        let physical = vec![id.clone(), id.clone(), id.clone(), id];
        let expected: Vec<usize> = (0..9).collect();
        assert_eq!(
            verify_transversal_logical(&gc.code, &physical, &expected).unwrap(),
            0.0
        );
    }

    #[test]
    fn five_qudit_pairs_pass_kl() {
        let code = five_qudit_perfect(2).unwrap();
        for a in 0..5 {
            for b in (a + 1)..5 {
                let v = verify_kl_erasure(&code, &[a, b], 4096).unwrap();
                assert!(v < 1e-12, "({a},{b}): {v}");
            }
        }
    }

    #[test]
    fn kl_budget_is_enforced() {
        let gc = code_422(BuiltinGroup::S3).unwrap();
        let err = verify_kl_erasure(&gc.code, &[0], 2).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
