//! Fourth-moment diagnostic, norm-ball coverage and the plug-in estimator study,
//! written as CSV to stdout.

use univ_lab::datagen::CoordinateLaw;
use univ_lab::experiments::{
    run, CoverageSpec, CoverageStudy, ExperimentKind, ExperimentSpec, KurtosisStudy, MuSpec, PluginStudy,
};

fn main() -> univ_lab::Result<()> {
    let spec = ExperimentSpec::new(
        ExperimentKind::GaussianityAndCoverage(CoverageSpec {
            kurtosis: Some(KurtosisStudy { n: 4, d: vec![1, 10, 100], threshold: 0.1 }),
            coverage: Some(CoverageStudy {
                n: vec![200],
                d: vec![20],
                m: vec![2, 4],
                radii: 50,
                coordinates: CoordinateLaw::Rademacher,
                tolerance: 0.02,
            }),
            plugin: Some(PluginStudy {
                n: vec![100],
                d: vec![10],
                tau: vec![1.0],
                mu: vec![MuSpec::Zero, MuSpec::FirstAxis { norm: 1.0 }],
                coordinates: CoordinateLaw::Rademacher,
            }),
        }),
        5000,
        4,
    );
    print!("{}", run(&spec)?.to_csv_string());
    Ok(())
}
