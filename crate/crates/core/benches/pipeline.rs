use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skinbench::calib::{
    cross_validate_with, generate_dataset_with, select_model_with, train_model, GpHyper, ModelKind, ModelSpec,
    SweepProtocol,
};
use skinbench::grip::ControllerConfig;
use skinbench::skin::SkinSim;
use skinbench::trial::{run_campaign_with, strawberry_fixture, SlipParams, TrialConfig, TrialSetup};
use skinbench::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn protocol() -> SweepProtocol {
    SweepProtocol {
        repeats: 4,
        ..SweepProtocol::default()
    }
}

fn dataset(c: &mut Criterion) {
    let sim = SkinSim::default();
    let p = SweepProtocol::default();
    let mut g = c.benchmark_group("generate_dataset");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_dataset_with(&p, &sim, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn cross_validation(c: &mut Criterion) {
    let sim = SkinSim::default();
    let ds = generate_dataset_with(&protocol(), &sim, 1, Execution::Sequential).unwrap();
    let spec = ModelSpec::gp_fixed(ModelKind::GpExponential, GpHyper::new(1.0, 10.0, 1e-3));
    let mut g = c.benchmark_group("cross_validate_gp");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cross_validate_with(&ds, &spec, 10, 1, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("select_model_zoo");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| select_model_with(&ds, &ModelSpec::zoo(), 10, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn campaign(c: &mut Criterion) {
    let sim = SkinSim::default();
    let ds = generate_dataset_with(&protocol(), &sim, 1, Execution::Sequential).unwrap();
    let model = train_model(&ds, &ModelSpec::new(ModelKind::GpExponential)).unwrap();
    let trial = TrialConfig::default();
    let ctrl = ControllerConfig::default();
    let setup = TrialSetup {
        model: &model,
        trial: &trial,
        controller: &ctrl,
        sim: &sim,
        slip: SlipParams::default(),
    };
    let samples = strawberry_fixture();
    let mut g = c.benchmark_group("campaign_5x5");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_campaign_with(&samples, 5, &setup, 1, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dataset, cross_validation, campaign);
criterion_main!(benches);
