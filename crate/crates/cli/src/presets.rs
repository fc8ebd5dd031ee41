//! Built-in scenes.

use crate::scene::{parse_scene, Scene, SceneError};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "example33",
        summary: "R^6 -> R^2, (e^x3 cos x5, e^x3 sin x5), anti-holomorphic, dilation e^x3",
        text: "\
name = example33
[source]
dim = 6
g = identity
J = canonical
kahler = true
[target]
dim = 2
g = identity
[map]
F 1 = exp(x3)*cos(x5)
F 2 = exp(x3)*sin(x5)
[sampling]
box = -1 1
exclude x5 periodic pi/2 offset 0
count = 200
seed = 1
",
    },
    Preset {
        name: "linproj42",
        summary: "orthogonal projection R^4 -> R^2 onto (x1, x2)",
        text: "\
name = linproj42
[source]
dim = 4
g = identity
J = canonical
kahler = true
[target]
dim = 2
g = identity
[map]
F 1 = x1
F 2 = x2
[sampling]
box = -1 1
count = 200
seed = 1
",
    },
    Preset {
        name: "holo4",
        summary: "R^4 -> R^2, (e^x3 cos x4, e^x3 sin x4), holomorphic fibers, D2 empty",
        text: "\
name = holo4
[source]
dim = 4
g = identity
J = canonical
kahler = true
[target]
dim = 2
g = identity
[map]
F 1 = exp(x3)*cos(x4)
F 2 = exp(x3)*sin(x4)
[sampling]
box = -1 1
count = 200
seed = 1
",
    },
    Preset {
        name: "exp1",
        summary: "R^2 -> R, e^x1, no complex structure",
        text: "\
name = exp1
[source]
dim = 2
g = identity
[target]
dim = 1
g = identity
[map]
F 1 = exp(x1)
[sampling]
box = -1 1
count = 50
seed = 1
[flags]
machinery_only
",
    },
    Preset {
        name: "diag-x1sq",
        summary: "(R^2, diag(1, x1^2)) -> R, x1: circle fibers, no complex structure",
        text: "\
name = diag-x1sq
[source]
dim = 2
g 1 1 = 1
g 2 2 = x1^2
[target]
dim = 1
g = identity
[map]
F 1 = x1
[sampling]
box x1 = 1 3
box x2 = -1 1
count = 50
seed = 1
[flags]
machinery_only
",
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load_preset(name: &str) -> Option<Result<Scene, SceneError>> {
    find(name).map(|p| parse_scene(p.text, p.name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        for p in PRESETS {
            let s = load_preset(p.name).unwrap().unwrap();
            assert_eq!(s.name, p.name);
        }
        assert!(load_preset("nope").is_none());
    }

    #[test]
    fn example_scene_shape() {
        let s = load_preset("example33").unwrap().unwrap();
        assert_eq!((s.source().dim(), s.target().dim()), (6, 2));
        assert!(s.source().has_complex_structure());
        assert!(s.flags.kahler_expected);
        assert_eq!(s.source().domain().excluded.len(), 1);
        assert_eq!(
            s.map.components()[0],
            semisub_core::parse("exp(x3)*cos(x5)", 6).unwrap()
        );
    }
}
