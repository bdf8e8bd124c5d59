//! Cross-module invariants: oracle cross-checks, functoriality of maps
//! between spaces, the identification of iterated covers, and refining
//! machinery consistency.

use dischom::chains::{concatenate, map_homotopy, reverse, verify_homotopy, Chain};
use dischom::connect::ConnectorBudget;
use dischom::cover::{build_cover, lift_chain, CoverBudget};
use dischom::fixtures::{self, CircleMetric};
use dischom::metric::{chain_components, connectivity_threshold, FiniteMetricSpace, ScaleGraph};
use dischom::nullity::{is_null, NullBudget, NullVerdict};
use dischom::presentation::presentation;
use dischom::snf::RowspaceTester;
use dischom::spectrum::critical_spectrum;
use dischom::tower::{
    check_refining, gref_certificate, lift_homotopy_with_endpoints, verify_thread_homotopy,
    GrefOutcome, RefiningVerdict, Tower,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hexagon() -> FiniteMetricSpace<f64> {
    let edges: Vec<(usize, usize, f64)> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
    FiniteMetricSpace::from_graph(6, &edges, None).unwrap()
}

#[test]
fn one_component_means_every_pair_chains() {
    // Cross-check the union-find partition against a direct path search in
    // the scale graph, fifty random pairs per scale.
    let spaces = vec![fixtures::unit_square(), hexagon(), fixtures::warsaw_circle(64).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for space in spaces {
        for &(_, _, probe) in dischom::spectrum::probe_grid(&space).iter() {
            if !probe.is_finite() {
                continue;
            }
            let parts = chain_components(&space, probe).unwrap();
            let graph = ScaleGraph::new(&space, probe).unwrap();
            for _ in 0..50 {
                let a = rng.gen_range(0..space.len());
                let b = rng.gen_range(0..space.len());
                // Breadth-first reachability, independent of union-find.
                let mut seen = vec![false; space.len()];
                let mut queue = std::collections::VecDeque::from([a]);
                seen[a] = true;
                while let Some(u) = queue.pop_front() {
                    for &v in graph.neighbors(u) {
                        if !seen[v] {
                            seen[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
                assert_eq!(seen[b], parts.same_component(a, b), "pair ({a},{b}) at {probe}");
            }
        }
    }
}

#[test]
fn connectivity_threshold_matches_grid_scan() {
    let sphere_stage = fixtures::cat0_sphere_tower(3, 0.1, &[1.0, 1.5], 16)
        .unwrap()
        .stage(0)
        .clone();
    let spaces = vec![
        fixtures::circle(60, 1.0, CircleMetric::Arc).unwrap(),
        fixtures::unit_square(),
        sphere_stage,
        fixtures::cantor_suspension(3, 5).unwrap(),
    ];
    for space in spaces {
        assert!(space.len() <= 64);
        let mst = connectivity_threshold(&space);
        let mut scan = None;
        for &v in &space.distance_values() {
            let just_above = v * (1.0 + 1e-9) + f64::MIN_POSITIVE;
            if chain_components(&space, just_above).unwrap().count() == 1 {
                scan = Some(v);
                break;
            }
        }
        assert_eq!(scan, Some(mst));
    }
}

#[test]
fn homotopies_push_through_tower_bonds() {
    // A 1-Lipschitz index map sends verified homotopies to verified
    // homotopies, move for move, on every bonding map of the fixture
    // towers.
    let towers: Vec<Tower<f64>> = vec![
        fixtures::solenoid_tower(2, 32, 1.0).unwrap(),
        fixtures::cat0_sphere_tower(3, 0.1, &[1.0, 1.5, 2.0], 16).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for tower in towers {
        for t in 1..tower.stage_count() {
            let bond = tower.bond_map(t - 1, t).unwrap();
            let up = tower.stage(t);
            let eps = connectivity_threshold(up) * 3.0;
            // A few random null loops upstairs with their witnesses.
            let mut found = 0;
            let mut attempts = 0;
            while found < 5 && attempts < 60 {
                attempts += 1;
                let base = rng.gen_range(0..up.len());
                let ns: Vec<usize> =
                    (0..up.len()).filter(|&q| q != base && up.dist(base, q) < eps).collect();
                if ns.is_empty() {
                    continue;
                }
                let mid = ns[rng.gen_range(0..ns.len())];
                let loop_chain = Chain::new(eps, vec![base, mid, base]);
                let Ok(NullVerdict::Null { witness }) =
                    is_null(up, eps, &loop_chain, NullBudget::default())
                else {
                    continue;
                };
                verify_homotopy(up, &witness).unwrap();
                let mapped = map_homotopy(&witness, &bond);
                let end = verify_homotopy(tower.stage(t - 1), &mapped).unwrap();
                assert_eq!(end.len(), 1);
                found += 1;
            }
            assert!(found > 0);
        }
    }
}

#[test]
fn non_null_certificates_equal_the_abelianized_word() {
    let space = hexagon();
    let eps = 1.5;
    let loop_chain = Chain::new(eps, vec![0, 1, 2, 3, 4, 5, 0]);
    let verdict = is_null(&space, eps, &loop_chain, NullBudget::default()).unwrap();
    let NullVerdict::NonNull { certificate } = verdict else {
        panic!("hexagon loop must be non-null below the triangle scale")
    };
    let pres = presentation(&space, eps, 0).unwrap();
    let word = pres.chain_word(&space, &loop_chain).unwrap();
    let tester = RowspaceTester::new(&pres.relator_rows(), pres.gen_count()).unwrap();
    let recomputed = tester.residue(&word.abelianize(pres.gen_count())).unwrap();
    assert_eq!(certificate.residue, recomputed);
    assert!(certificate.is_nonzero());
}

/// Fraction-free Gaussian elimination over the integers: an independent
/// rank oracle for the relator matrix.
fn bareiss_rank(rows: &[Vec<i64>], ncols: usize) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let nrows = m.len();
    let mut rank = 0usize;
    let mut prev: i128 = 1;
    let mut row = 0usize;
    for col in 0..ncols {
        let Some(pivot) = (row..nrows).find(|&i| m[i][col] != 0) else { continue };
        m.swap(row, pivot);
        for i in 0..nrows {
            if i == row {
                continue;
            }
            for j in (col + 1)..ncols {
                m[i][j] = (m[i][j] * m[row][col] - m[i][col] * m[row][j]) / prev;
            }
            m[i][col] = 0;
        }
        prev = m[row][col];
        rank += 1;
        row += 1;
        if row == nrows {
            break;
        }
    }
    rank
}

#[test]
fn betti_agrees_with_cycle_rank_minus_rational_rank() {
    let spaces = vec![
        (fixtures::unit_square(), vec![1.2, 1.5]),
        (hexagon(), vec![1.5, 2.5]),
        (fixtures::circle(12, 1.0, CircleMetric::Arc).unwrap(), vec![0.1, 0.2, 0.3, 0.45]),
    ];
    for (space, scales) in spaces {
        for eps in scales {
            let pres = presentation(&space, eps, 0).unwrap();
            let h = pres.homology().unwrap();
            let dense: Vec<Vec<i64>> = pres
                .relator_rows()
                .iter()
                .map(|row| {
                    let mut v = vec![0i64; pres.gen_count()];
                    for &(c, x) in row {
                        v[c] = x;
                    }
                    v
                })
                .collect();
            let rank = bareiss_rank(&dense, pres.gen_count());
            // Cycle rank of the scale graph restricted to the component.
            let graph = ScaleGraph::new(&space, eps).unwrap();
            let in_comp: Vec<usize> = pres.component.clone();
            let edge_count = graph
                .edges()
                .iter()
                .filter(|&&(i, _)| in_comp.contains(&i))
                .count();
            let cycle_rank = edge_count + 1 - in_comp.len();
            assert_eq!(pres.gen_count(), cycle_rank);
            assert_eq!(h.betti, cycle_rank - rank, "betti mismatch at {eps}");
        }
    }
}

#[test]
fn lifts_from_distinct_fiber_vertices_never_collide() {
    let square = fixtures::unit_square();
    let cover = build_cover(&square, 1.2, 0, CoverBudget::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let fiber = cover.fiber(0);
    assert!(fiber.len() >= 3);
    let mut ran = 0;
    for _ in 0..100 {
        let len = rng.gen_range(1..=4);
        let mut points = vec![0usize];
        for _ in 0..len {
            let last = *points.last().unwrap();
            let ns: Vec<usize> =
                (0..4).filter(|&q| q != last && square.dist(last, q) < 1.2).collect();
            points.push(ns[rng.gen_range(0..ns.len())]);
        }
        let chain = Chain::new(1.2, points);
        let (a, b) = (fiber[0], fiber[1]);
        let la = lift_chain(&square, &cover, &chain, a);
        let lb = lift_chain(&square, &cover, &chain, b);
        let (Ok(la), Ok(lb)) = (la, lb) else { continue };
        for (x, y) in la.vertices.iter().zip(lb.vertices.iter()) {
            assert_ne!(x, y, "lifts from distinct fiber vertices must not touch");
        }
        ran += 1;
    }
    assert!(ran > 50);
}

#[test]
fn iterated_cover_identification_on_the_square() {
    // The cover at the finer scale and the cover of the coarse cover's
    // related-pair graph agree: same vertex counts, same fiber sizes, same
    // component counts on matching truncations.
    let square = fixtures::unit_square();
    let radius = 6;
    let budget = CoverBudget { truncation_radius: radius, ..CoverBudget::default() };

    let direct = build_cover(&square, 1.2, 0, budget).unwrap();

    // The coarse cover at 1.5 is the square itself; its related-pair graph
    // at 1.2 is the 4-cycle of unit sides.
    let coarse = build_cover(&square, 1.5, 0, CoverBudget::default()).unwrap();
    assert!(coarse.is_complete());
    let mut edges = Vec::new();
    for v in 0..coarse.vertex_count() {
        for q in 0..square.len() {
            if square.dist(coarse.endpoint(v), q) < 1.2 {
                if let Ok(Some(w)) = coarse.edge(&square, v, q) {
                    if v < w {
                        edges.push((v, w, square.dist(coarse.endpoint(v), q)));
                    }
                }
            }
        }
    }
    let fstar_space =
        FiniteMetricSpace::from_graph(coarse.vertex_count(), &edges, None).unwrap();
    let iterated = build_cover(&fstar_space, 1.2, 0, budget).unwrap();

    assert_eq!(direct.vertex_count(), iterated.vertex_count());
    let mut direct_fibers: Vec<usize> = (0..4).map(|p| direct.fiber(p).len()).collect();
    let mut iterated_fibers: Vec<usize> = (0..4).map(|p| iterated.fiber(p).len()).collect();
    direct_fibers.sort_unstable();
    iterated_fibers.sort_unstable();
    assert_eq!(direct_fibers, iterated_fibers);
    let dc = dischom::cover::cover_chain_components(&square, &direct, 1.1).count();
    let ic = dischom::cover::cover_chain_components(&fstar_space, &iterated, 1.1).count();
    assert_eq!(dc, ic);
}

#[test]
fn refining_stays_true_as_fineness_relaxes() {
    let s = hexagon();
    let tower = Tower::new(vec![1.0, 2.0], vec![s.clone(), s], vec![(0..6).collect()]).unwrap();
    let mut last = None;
    for kappa in [1.05, 1.1, 1.2] {
        let v = check_refining(&tower, 0, 1, 1.5, 1.2, kappa, ConnectorBudget::default()).unwrap();
        assert!(v.is_refining(), "kappa {kappa}");
        last = Some(v);
    }
    assert!(last.is_some());
}

#[test]
fn geodesic_certificate_implies_search_verdict() {
    let tower = fixtures::cat0_sphere_tower(3, 0.1, &[1.0, 1.5], 24).unwrap();
    let eps = 1.2; // above twice the gap
    match gref_certificate(&tower, 0, 1, eps).unwrap() {
        GrefOutcome::Certified { delta_found, .. } => {
            let delta = (delta_found * 0.9).min(eps * 0.75);
            let kappa = connectivity_threshold(tower.stage(1)) * 1.5;
            let v = check_refining(&tower, 0, 1, eps, delta, kappa.min(delta), ConnectorBudget::default())
                .unwrap();
            assert!(v.is_refining(), "certificate must agree with the search");
        }
        GrefOutcome::NotApplicable { reason } => panic!("expected a certificate: {reason}"),
    }
}

#[test]
fn witnesses_extend_along_short_chains() {
    // When the refining check holds, witnesses concatenate along any short
    // chain downstairs into a connector whose image class is the chain's.
    let s = hexagon();
    let tower = Tower::new(vec![1.0, 2.0], vec![s.clone(), s.clone()], vec![(0..6).collect()]).unwrap();
    let (eps, delta, kappa) = (1.5, 1.2, 1.2);
    let v = check_refining(&tower, 0, 1, eps, delta, kappa, ConnectorBudget::default()).unwrap();
    let RefiningVerdict::Refining { witnesses } = v else { panic!("expected refining") };
    let witness_for = |a: usize, b: usize| -> Chain<f64> {
        witnesses
            .iter()
            .find(|w| {
                (w.image_pair == (a, b) || w.image_pair == (b, a)) && w.preimages == w.image_pair
            })
            .map(|w| {
                if w.image_pair == (a, b) {
                    w.chain.clone()
                } else {
                    reverse(&w.chain)
                }
            })
            .unwrap_or_else(|| panic!("no witness for pair ({a},{b})"))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..20 {
        // Random 3-step chain downstairs within delta.
        let mut beta = vec![rng.gen_range(0..6)];
        for _ in 0..3 {
            let last = *beta.last().unwrap();
            let ns: Vec<usize> = (0..6).filter(|&q| s.dist(last, q) < delta && q != last).collect();
            beta.push(ns[rng.gen_range(0..ns.len())]);
        }
        // Composite connector through the per-pair witnesses.
        let mut composite = witness_for(beta[0], beta[1]);
        for k in 1..3 {
            composite = concatenate(&composite, &witness_for(beta[k], beta[k + 1])).unwrap();
        }
        // Its class equals the chain's: the composite times the reversed
        // chain is null at the coarse scale.
        let beta_chain = Chain::new(eps, beta.clone());
        let composite_eps = Chain::new(eps, composite.points.clone());
        let probe = concatenate(&composite_eps, &reverse(&beta_chain)).unwrap();
        let verdict = is_null(&s, eps, &probe, NullBudget::default()).unwrap();
        assert!(verdict.is_null(), "composite witness class must match the chain");
    }
}

#[test]
fn lifted_null_loops_stay_null_upstairs() {
    // A null loop downstairs lifts to a thread homotopy at depth one with
    // both endpoint threads equal, and the lift replays cleanly.
    let tower = fixtures::solenoid_tower(1, 16, 1.0).unwrap();
    let coarse = tower.stage(0);
    let eps = 0.5;
    let full_loop = Chain::new(eps, (0..8).chain([0]).collect());
    let NullVerdict::Null { witness } = is_null(coarse, eps, &full_loop, NullBudget::default()).unwrap()
    else {
        panic!("the full loop is null above a third of the circumference")
    };
    let thread = tower.thread_from(1, 0).unwrap();
    let lifted = lift_homotopy_with_endpoints(
        &tower,
        0,
        &witness,
        1,
        Some((thread.clone(), thread.clone())),
        None,
    )
    .unwrap();
    let end = verify_thread_homotopy(&tower, &lifted).unwrap();
    assert_eq!(end, vec![thread]);
}

#[test]
fn sphere_tower_scan_holds_above_twice_the_gap() {
    let tower = fixtures::cat0_sphere_tower(3, 0.1, &[1.0, 1.25, 1.5], 24).unwrap();
    let gap = 0.25;
    let grid = [2.0 * gap * 1.1, 2.0 * gap * 1.6, 2.0 * gap * 2.4];
    let report =
        dischom::tower::invlim_scan(&tower, &grid, 0.0, ConnectorBudget::default(), 2).unwrap();
    for &eps in &grid {
        assert!(
            matches!(report.holds_at(eps), dischom::tower::CellVerdict::True { .. }),
            "scan must hold at {eps}"
        );
    }
}

#[test]
fn repeated_points_contract_through_tree_moves() {
    // A loop whose word is empty but which carries duplicated points: the
    // witness comes out of the tree-move translation, not the search.
    let square = fixtures::unit_square();
    let loop_chain = Chain::new(1.2, vec![0, 1, 1, 2, 1, 0, 0]);
    let verdict = is_null(&square, 1.2, &loop_chain, NullBudget::default()).unwrap();
    let NullVerdict::Null { witness } = verdict else { panic!("freely trivial loop") };
    let end = verify_homotopy(&square, &witness).unwrap();
    assert_eq!(end.points, vec![0]);
}

#[test]
fn circle_trivialization_approaches_one_third() {
    let expectations = [(12usize, 0.09), (24, 0.05), (60, 0.04)];
    for (n, tolerance) in expectations {
        let circle = fixtures::circle(n, 1.0, CircleMetric::Arc).unwrap();
        let spectrum = critical_spectrum(&circle, 0).unwrap();
        let t_n = spectrum.largest_betti_critical().unwrap();
        assert!(
            (t_n - 1.0 / 3.0).abs() <= tolerance,
            "n = {n}: trivialization at {t_n}"
        );
    }
}
