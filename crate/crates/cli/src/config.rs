//! Run parameters: TOML file sections, command-line overrides and the
//! resolved, radians-only form stored in manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};
use topowalk::evolution::Metric;
use topowalk::experiments::{Angles, GridAxis, WalkKind, REFERENCE_DEFECT};
use topowalk::{Error, Result};

use crate::angle::AngleSpec;

/// Every parameter any subcommand understands. Unset fields fall back to
/// per-command defaults or are reported as missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub def_theta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub def_theta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub def_theta1_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub def_theta2_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_dis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_configs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkKind>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl Params {
    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(mut self, over: &Params) -> Params {
        overlay!(self, over; size, steps, theta1, theta2, def_theta1, def_theta2,
            metric, seed, resolution, theta1_range, theta2_range, def_theta1_range,
            def_theta2_range, sizes, k_resolution, theta_dis, n_configs, walk);
        self
    }

    pub fn size(&self) -> Result<usize> {
        let size = required(self.size, "L", "--L or [lattice] L")?;
        if size < 2 {
            return Err(Error::config("L", format!("must be at least 2, got {size}")));
        }
        Ok(size)
    }

    pub fn steps(&self) -> Result<usize> {
        let steps = required(self.steps, "steps", "--steps or [run] steps")?;
        if steps == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        Ok(steps)
    }

    pub fn walker(&self) -> Result<Angles> {
        Ok(Angles::new(
            required(self.theta1, "theta1", "--theta1 or [walker] theta1")?,
            required(self.theta2, "theta2", "--theta2 or [walker] theta2")?,
        ))
    }

    /// Defect angles, defaulting to `(5pi/8, pi/2)`.
    pub fn defect(&self) -> Angles {
        Angles::new(
            self.def_theta1.unwrap_or(REFERENCE_DEFECT.theta1),
            self.def_theta2.unwrap_or(REFERENCE_DEFECT.theta2),
        )
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn resolution(&self, default: usize) -> Result<usize> {
        let r = self.resolution.unwrap_or(default);
        if r < 2 {
            return Err(Error::config("resolution", format!("must be at least 2, got {r}")));
        }
        Ok(r)
    }

    /// Grid axis from a range field, `[-pi, pi]` when unset.
    pub fn axis(&self, field: &str, resolution: usize) -> Result<GridAxis> {
        let range = match field {
            "theta1_range" => self.theta1_range,
            "theta2_range" => self.theta2_range,
            "def_theta1_range" => self.def_theta1_range,
            "def_theta2_range" => self.def_theta2_range,
            _ => unreachable!("unknown range field {field}"),
        };
        let [lo, hi] = range.unwrap_or([-std::f64::consts::PI, std::f64::consts::PI]);
        GridAxis::new(lo, hi, resolution).map_err(|e| Error::config(field, e.to_string()))
    }

    pub fn k_resolution(&self, default: usize, min: usize) -> Result<usize> {
        let k = self.k_resolution.unwrap_or(default);
        if k < min {
            return Err(Error::config(
                "k_resolution",
                format!("must be at least {min}, got {k}"),
            ));
        }
        Ok(k)
    }

    pub fn sizes(&self) -> Result<Vec<usize>> {
        let sizes = required(self.sizes.clone(), "sizes", "--sizes or [grid] sizes")?;
        if sizes.is_empty() {
            return Err(Error::config("sizes", "list is empty"));
        }
        if let Some(&bad) = sizes.iter().find(|&&s| s < 2) {
            return Err(Error::config("sizes", format!("every L must be at least 2, got {bad}")));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sizes", "must be strictly ascending"));
        }
        Ok(sizes)
    }

    pub fn theta_dis(&self) -> Result<f64> {
        let t = required(self.theta_dis, "theta_dis", "--theta-dis or [disorder] theta_dis")?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::config("theta_dis", format!("must be finite and >= 0, got {t}")));
        }
        Ok(t)
    }

    pub fn n_configs(&self) -> Result<usize> {
        let n = self.n_configs.unwrap_or(20);
        if n == 0 {
            return Err(Error::config("n_configs", "must be positive"));
        }
        Ok(n)
    }
}

fn required<T>(value: Option<T>, field: &str, hint: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(field, format!("missing required value (set {hint})")))
}

/// Config-file layout.
///
/// ```toml
/// [lattice]
/// L = 40
/// [walker]
/// theta1 = "0.27pi"
/// theta2 = "-0.78pi"
/// [defect]
/// theta1 = "5pi/8"
/// theta2 = "pi/2"
/// [run]
/// steps = 1000
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    lattice: LatticeSection,
    #[serde(default)]
    walker: AngleSection,
    #[serde(default)]
    defect: AngleSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    disorder: DisorderSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSection {
    #[serde(rename = "L")]
    size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AngleSection {
    theta1: Option<AngleSpec>,
    theta2: Option<AngleSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    steps: Option<usize>,
    metric: Option<Metric>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    resolution: Option<usize>,
    theta1: Option<[AngleSpec; 2]>,
    theta2: Option<[AngleSpec; 2]>,
    def_theta1: Option<[AngleSpec; 2]>,
    def_theta2: Option<[AngleSpec; 2]>,
    sizes: Option<Vec<usize>>,
    k_resolution: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisorderSection {
    theta_dis: Option<f64>,
    n_configs: Option<usize>,
    walk: Option<WalkKind>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Params> {
        let file: FileConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            let at = match line {
                Some(l) => format!("{origin}:{l}"),
                None => origin.to_string(),
            };
            Error::config(at, e.message().to_string())
        })?;
        file.into_params()
    }

    pub fn load(path: &Path) -> Result<Params> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn into_params(self) -> Result<Params> {
        let angle = |spec: Option<AngleSpec>, field: &str| -> Result<Option<f64>> {
            spec.map(|s| s.radians().map_err(|m| Error::config(field, m)))
                .transpose()
        };
        let range = |spec: Option<[AngleSpec; 2]>, field: &str| -> Result<Option<[f64; 2]>> {
            spec.map(|[lo, hi]| {
                let lo = lo.radians().map_err(|m| Error::config(field, m.clone()))?;
                let hi = hi.radians().map_err(|m| Error::config(field, m))?;
                Ok([lo, hi])
            })
            .transpose()
        };
        Ok(Params {
            size: self.lattice.size,
            steps: self.run.steps,
            theta1: angle(self.walker.theta1, "walker.theta1")?,
            theta2: angle(self.walker.theta2, "walker.theta2")?,
            def_theta1: angle(self.defect.theta1, "defect.theta1")?,
            def_theta2: angle(self.defect.theta2, "defect.theta2")?,
            metric: self.run.metric,
            seed: self.run.seed,
            resolution: self.grid.resolution,
            theta1_range: range(self.grid.theta1, "grid.theta1")?,
            theta2_range: range(self.grid.theta2, "grid.theta2")?,
            def_theta1_range: range(self.grid.def_theta1, "grid.def_theta1")?,
            def_theta2_range: range(self.grid.def_theta2, "grid.def_theta2")?,
            sizes: self.grid.sizes,
            k_resolution: self.grid.k_resolution,
            theta_dis: self.disorder.theta_dis,
            n_configs: self.disorder.n_configs,
            walk: self.disorder.walk,
        })
    }
}
