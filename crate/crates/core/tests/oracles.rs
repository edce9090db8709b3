mod common;

use nalgebra::{DMatrix, DVector};
use pdsvm::solver_mm::{mm_solve, MmWorkspace};
use pdsvm::solver_sd::{sd_solve, SdWorkspace};
use pdsvm::{
    cross_validate, gram_matrix, hinge_loss, init_heuristic, kernel_design, load_csv, load_csv_with_classes,
    make_stratified_folds, read_csv, read_table, selection_metrics, sparsity, thin_svd, train_ovo, write_csv,
    CvOptions, Dataset, DesignMatrix, FitConfig, KernelModel, LabelColumn, PenaltyWeights, Problem, SolverConfig,
    SolverKind, SparsityConstraint, SparsityLevel, TrainedModel, TransformKind,
};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use common::{brute_force_distance, normal_vec, random_design, rng, simple_slope};

#[test]
fn init_matches_per_column_regression() {
    let mut r = rng(11);
    for _ in 0..10 {
        let d = random_design(&mut r, 25, 6);
        let beta = init_heuristic(&d);
        let y: Vec<f64> = d.y().iter().copied().collect();
        for j in 0..6 {
            let x: Vec<f64> = d.x().column(j).iter().copied().collect();
            assert!((beta[j] - simple_slope(&x, &y)).abs() < 1e-12);
        }
        assert!((beta[6] - y.iter().sum::<f64>() / 25.0).abs() < 1e-15);
    }
}

#[test]
fn mm_and_sd_agree_when_convex() {
    // With k = p the distance term vanishes and the objective is the convex
    // squared hinge loss, so both solvers must reach the same minimum value.
    let mut r = rng(5);
    for trial in 0..5 {
        let d = random_design(&mut r, 40, 6);
        let c = SparsityConstraint::new(6, 6).unwrap();
        let w = PenaltyWeights::new(d.n(), &c, 5.0);
        let problem = Problem::new(d.clone());
        let cfg = |kind| SolverConfig { kind, grad_tol: 1e-20, max_inner: 200_000, ..SolverConfig::default() };
        let beta0 = init_heuristic(&d);
        let mut mmws = MmWorkspace::new(problem.svd().unwrap(), pdsvm::solver::UpdateForm::Loop);
        let (bm, rm) = mm_solve(&beta0, &mut mmws, &d, &c, &w, &cfg(SolverKind::MM)).unwrap();
        let mut sdws = SdWorkspace::new(&d);
        let (bs, rs) = sd_solve(&beta0, &mut sdws, &d, &c, &w, &cfg(SolverKind::SD)).unwrap();
        assert!((rm.objective - rs.objective).abs() < 1e-9 * (1.0 + rm.objective), "trial {trial}");
        assert!((hinge_loss(&bm, &d) - hinge_loss(&bs, &d)).abs() < 1e-9, "trial {trial}");
    }
}

#[test]
fn kernel_loss_recomposes_from_scores() {
    let mut r = rng(9);
    let n = 30;
    let x = DMatrix::from_fn(n, 2, |_, _| r.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| if i % 3 == 0 { -1.0 } else { 1.0 });
    let gamma = 0.7;
    let k = gram_matrix(&x, gamma);
    let d = kernel_design(&k, &y).unwrap();
    let alpha = normal_vec(&mut r, n + 1) * 0.3;
    let m = KernelModel::new(alpha.clone(), gamma, x.clone(), y.clone()).unwrap();
    let direct: f64 = (0..n)
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            (1.0 - y[i] * m.score(&row)).max(0.0).powi(2)
        })
        .sum::<f64>()
        / (2.0 * n as f64);
    assert!((hinge_loss(&alpha, &d) - direct).abs() < 1e-12);
}

#[test]
fn ovo_is_invariant_to_row_order() {
    let ds = blobs(3, 30, 4, 21);
    let perm: Vec<usize> = (0..ds.n()).rev().collect();
    let shuffled = ds.subset(&perm);
    let cfg = FitConfig::default();
    let (a, _) = train_ovo(&ds, SparsityLevel::Count(2), &cfg, None).unwrap();
    let (b, _) = train_ovo(&shuffled, SparsityLevel::Count(2), &cfg, None).unwrap();
    assert_eq!(a.pairs.len(), 3);
    for (pa, pb) in a.pairs.iter().zip(&b.pairs) {
        assert_eq!((pa.positive, pa.negative), (pb.positive, pb.negative));
        assert!((pa.model.coefficients() - pb.model.coefficients()).amax() < 1e-6);
    }
}

#[test]
fn blobs_are_learned() {
    let ds = blobs(3, 40, 4, 2);
    let (m, reports) = train_ovo(&ds, SparsityLevel::Fraction(0.5), &FitConfig::default(), None).unwrap();
    assert_eq!(reports.len(), 3);
    let pred = m.predict_rows(ds.features());
    let right = pred.iter().zip(ds.labels()).filter(|(a, b)| a == b).count();
    assert!(right as f64 >= 0.95 * ds.n() as f64);
    for c in &m.pairs {
        assert!(sparsity::nonzero_count(&c.model.coefficients().rows(0, 4).into_owned()) <= 2);
    }
}

#[test]
fn cv_table_has_one_row_per_fold_and_level() {
    let ds = blobs(2, 30, 5, 4);
    let folds = make_stratified_folds(ds.labels(), 3, 0).unwrap();
    let mut opts = CvOptions::new(vec![0.0, 0.4, 0.8], FitConfig::default());
    opts.transform = TransformKind::Standardized;
    let t = cross_validate(&ds, None, &folds, &opts).unwrap();
    assert_eq!(t.rows.len(), 9);
    for f in 0..3 {
        let levels: Vec<f64> = t.rows.iter().filter(|r| r.fold == f).map(|r| r.s).collect();
        assert_eq!(levels, vec![0.0, 0.4, 0.8]);
    }
    assert!(t.rows.iter().all(|r| r.time.is_none() && r.test.is_none() && r.error.is_none()));
    let sel = t.selection.unwrap();
    assert!(opts.grid.contains(&sel.s));

    let t0 = cross_validate(&ds, Some(&ds), &folds, &CvOptions::new(vec![0.0], FitConfig::default())).unwrap();
    assert_eq!(t0.rows.len(), 3);
    assert!(t0.rows.iter().all(|r| r.k == Some(5)));
    assert_eq!(t0.selection.unwrap().s, 0.0);
}

#[test]
fn csv_roundtrip_through_table_reader() {
    let ds = blobs(3, 5, 3, 8);
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf).unwrap();
    let back = read_csv(buf.as_slice(), &LabelColumn::Name("label".into()), true).unwrap();
    assert_eq!(back.features(), ds.features());
    assert_eq!(back.labels(), ds.labels());
    let table = read_table(buf.as_slice(), Some(&LabelColumn::Index(3)), true).unwrap();
    assert_eq!(&table.features, ds.features());
    assert_eq!(table.labels.unwrap()[..3], ["c0", "c1", "c2"]);
    // Without a label column every column must be numeric.
    let err = read_table(buf.as_slice(), None, true).unwrap_err();
    assert!(matches!(err, pdsvm::Error::Parse { column, .. } if column == "label"));
}

#[test]
fn files_roundtrip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let train_path = dir.path().join("train.csv");
    let test_path = dir.path().join("test.csv");
    let ds = blobs(3, 12, 3, 6);
    write_csv(&ds, std::fs::File::create(&train_path).unwrap()).unwrap();
    // The test file lists classes in a different order of appearance.
    let rev: Vec<usize> = (0..ds.n()).rev().collect();
    write_csv(&ds.subset(&rev), std::fs::File::create(&test_path).unwrap()).unwrap();

    let label = LabelColumn::Name("label".into());
    let train = load_csv(&train_path, &label, true).unwrap();
    let test = load_csv_with_classes(&test_path, &label, true, train.class_names()).unwrap();
    assert_eq!(test.class_names(), train.class_names());
    assert_eq!(test.labels(), ds.subset(&rev).labels());

    let fitted = pdsvm::apply_transform(&train, TransformKind::Standardized).unwrap();
    let (ovo, _) = train_ovo(&fitted, SparsityLevel::Count(2), &FitConfig::default(), None).unwrap();
    let model = TrainedModel::new(ovo, fitted.transform().clone());
    let model_path = dir.path().join("m.json");
    model.save(&model_path).unwrap();
    let back = TrainedModel::load(&model_path).unwrap();
    assert_eq!(back.predict_dataset(&test).unwrap(), model.predict_dataset(&test).unwrap());
}

#[test]
fn selection_metrics_count_supports() {
    let hat = DVector::from_vec(vec![1.0, 0.0, 2.0, 0.0, 0.5]);
    let truth = DVector::from_vec(vec![3.0, 1.0, 0.0, 0.0, 0.0]);
    let m = selection_metrics(&hat, &truth, 0.5).unwrap();
    assert_eq!((m.tp, m.fp, m.tn, m.fn_), (1, 1, 1, 1));
    assert_eq!((m.sen, m.spc, m.fdr, m.for_), (0.5, 0.5, 0.5, 0.5));
}

#[test]
fn gram_is_psd_and_permutation_equivariant() {
    let mut r = rng(3);
    let x = DMatrix::from_fn(20, 3, |_, _| r.sample::<f64, _>(StandardNormal));
    let k = gram_matrix(&x, 0.4);
    let eig = k.clone().symmetric_eigen();
    assert!(eig.eigenvalues.min() > -1e-10);
    let perm: Vec<usize> = (0..20).map(|i| (i * 7) % 20).collect();
    let kp = gram_matrix(&x.select_rows(perm.iter()), 0.4);
    for (a, &i) in perm.iter().enumerate() {
        for (b, &j) in perm.iter().enumerate() {
            assert_eq!(kp[(a, b)], k[(i, j)]);
        }
    }
}

/// Well separated Gaussian clusters, one per class, centred on axis points.
fn blobs(classes: usize, per_class: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let n = classes * per_class;
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let f = DMatrix::from_fn(n, p, |i, j| {
        let centre = if j == labels[i] % p { 4.0 } else { 0.0 };
        centre + 0.5 * r.sample::<f64, _>(StandardNormal)
    });
    Dataset::new(f, labels, (0..classes).map(|c| format!("c{c}")).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_distance_is_optimal(v in prop::collection::vec(-5.0f64..5.0, 2..9), k_frac in 0.0f64..1.0) {
        let beta = DVector::from_vec(v.clone());
        let p = v.len() - 1;
        let k = ((k_frac * p as f64) as usize).min(p);
        let c = SparsityConstraint::new(k, p).unwrap();
        let proj = sparsity::project(&beta, &c);
        prop_assert!(sparsity::nonzero_count(&proj.rows(0, p).into_owned()) <= k);
        prop_assert_eq!(proj[p], beta[p]);
        let d = sparsity::sq_distance(&beta, &c);
        prop_assert!((d - brute_force_distance(&v, k)).abs() < 1e-12);
        prop_assert!(((&beta - &proj).norm_squared() - d).abs() < 1e-12);
        // Idempotent.
        prop_assert_eq!(sparsity::project(&proj, &c), proj);
    }

    #[test]
    fn thin_svd_reconstructs(n in 2usize..12, p in 1usize..8, seed in 0u64..1000) {
        let mut r = rng(seed);
        let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
        let svd = thin_svd(&x, 1e-12).unwrap();
        prop_assert!((svd.reconstruct() - &x).amax() < 1e-10);
        prop_assert!(svd.s.iter().all(|&s| s > 0.0));
        prop_assert!((svd.v.transpose() * &svd.v - DMatrix::identity(svd.rank(), svd.rank())).amax() < 1e-10);
    }

    #[test]
    fn loss_is_nonnegative_and_zero_on_wide_margins(seed in 0u64..500, scale in 1.0f64..50.0) {
        let mut r = rng(seed);
        let d = random_design(&mut r, 15, 3);
        let beta = normal_vec(&mut r, 4);
        prop_assert!(hinge_loss(&beta, &d) >= 0.0);
        // A design whose rows are y_i times a fixed direction is separated
        // with margin `scale` by that direction.
        let dir = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let f = DMatrix::from_fn(15, 3, |i, j| d.y()[i] * dir[j]);
        let sep = DesignMatrix::from_features(&f, d.y().clone()).unwrap();
        let b = DVector::from_vec(vec![scale, 0.0, 0.0, 0.0]);
        prop_assert_eq!(hinge_loss(&b, &sep), 0.0);
    }
}
