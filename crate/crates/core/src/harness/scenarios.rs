//! Built-in scenarios, shipped as TOML so they double as schema examples.

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

pub struct Preset {
    pub name: String,
    pub summary: &'static str,
    pub toml: String,
}

fn euclidean_disk(name: &str, description: &str, h: &str, phi: &str) -> String {
    format!(
        r#"name = "{name}"
description = "{description}"

[manifold]
model = "euclidean"

[domain]
kind = "disk"
center = [0.0, 0.0]
radius = 1.0

[curvature]
h = "{h}"
z_window = [-6.0, 6.0]

[boundary]
phi = "{phi}"
"#
    )
}

fn geodesic_disk(name: &str, description: &str, h: &str, phi: &str, window: [f64; 2]) -> String {
    format!(
        r#"name = "{name}"
description = "{description}"

[manifold]
model = "hyperbolic"

[domain]
kind = "hyperbolic-geodesic-disk"
r = 1.0

[curvature]
h = "{h}"
z_window = [{:?}, {:?}]

[boundary]
phi = "{phi}"
"#,
        window[0], window[1]
    )
}

pub const SWEEP_VALUES: [&str; 5] = ["0.30", "0.40", "0.48", "0.52", "0.60"];

pub fn builtin_scenarios() -> Vec<Preset> {
    let mut out = vec![
        Preset {
            name: "euclidean-cap".into(),
            summary: "unit disk, H = 0.4, zero data; spherical cap of radius 2.5",
            toml: euclidean_disk(
                "euclidean-cap",
                "Constant H = 0.4 on the unit disk with zero data. Exact solution is a spherical cap of radius 2.5.",
                "0.4",
                "0",
            ),
        },
        Preset {
            name: "serrin-sharp-pass".into(),
            summary: "unit disk, H = 0.4 within the Serrin bound",
            toml: euclidean_disk(
                "serrin-sharp-pass",
                "Boundary curvature 1 dominates 2|H| = 0.8; solvable for all data.",
                "0.4",
                "0",
            ),
        },
        Preset {
            name: "serrin-sharp-fail".into(),
            summary: "unit disk, H = 0.55 beyond the Serrin bound, steep data 5*x1",
            toml: euclidean_disk(
                "serrin-sharp-fail",
                "2|H| = 1.1 exceeds the boundary curvature; steep data should lose the boundary values.",
                "0.55",
                "5*x1",
            ),
        },
    ];
    for v in SWEEP_VALUES {
        let name = format!("serrin-sweep-{v}");
        out.push(Preset {
            summary: "unit disk, data 5*x1, sweep of constant H across 0.5",
            toml: euclidean_disk(&name, "Sweep of constant H across the Serrin threshold 0.5 with data 5*x1.", v, "5*x1"),
            name,
        });
    }
    for v in ["0.20", "0.45"] {
        let name = format!("hyperbolic-small-H-{v}");
        out.push(Preset {
            summary: "hyperbolic geodesic disk r = 1, constant H below 1/2, data tanh(x1)",
            toml: geodesic_disk(
                &name,
                "Hyperbolic plane, |H| below the smallness limit 1/2.",
                v,
                "tanh(x1)",
                [-1.0, 1.0],
            ),
            name,
        });
    }
    out.push(Preset {
        name: "ricci-route".into(),
        summary: "hyperbolic geodesic disk r = 1, H = 0.6 + 0.05*tanh(z)",
        toml: geodesic_disk(
            "ricci-route",
            "Height-dependent H above 1/2; existence rests on the Serrin and Ricci conditions.",
            "0.6 + 0.05*tanh(z)",
            "0",
            [-1.0, 1.0],
        ),
    });
    out.push(Preset {
        name: "parallels-demo".into(),
        summary: "ellipse with semi-axes 1 and 0.5, H = 0.2",
        toml: r#"name = "parallels-demo"
description = "Parallel curves of an ellipse and the curvature comparison along inward normals."

[manifold]
model = "euclidean"

[domain]
kind = "ellipse"
a = 1.0
b = 0.5

[curvature]
h = "0.2"

[boundary]
phi = "0"

[checks]
parallel_trajectories = 8
"#
        .into(),
    });
    out.push(Preset {
        name: "barrier-report".into(),
        summary: "unit disk, H = 0.3 + 0.1*x1*x1, data 0.5*x1*x2",
        toml: r#"name = "barrier-report"
description = "Position-dependent H; barrier constants and residual checks."

[manifold]
model = "euclidean"

[domain]
kind = "disk"
radius = 1.0

[curvature]
h = "0.3 + 0.1*x1*x1"

[boundary]
phi = "0.5*x1*x2"
"#
        .into(),
    });
    out
}

pub fn find_scenario(name: &str) -> Result<ScenarioConfig> {
    let preset = builtin_scenarios()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{name}` (see list-scenarios)")))?;
    ScenarioConfig::from_toml(&preset.toml)
}
