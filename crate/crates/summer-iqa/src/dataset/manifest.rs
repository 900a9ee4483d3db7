//! Subjective-quality database ingestion: a generic CSV manifest plus an
//! adapter for the TID2013 directory layout.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{IqaError, Result};

/// High-level degradation category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Compression,
    Noise,
    Communication,
    Blur,
    Color,
    Global,
    Local,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Compression,
        Category::Noise,
        Category::Communication,
        Category::Blur,
        Category::Color,
        Category::Global,
        Category::Local,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Compression => "Compression",
            Category::Noise => "Noise",
            Category::Communication => "Communication",
            Category::Blur => "Blur",
            Category::Color => "Color",
            Category::Global => "Global",
            Category::Local => "Local",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One (reference, distorted) row of a quality database.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectiveRecord {
    pub reference_id: String,
    pub reference_path: PathBuf,
    pub distorted_path: PathBuf,
    pub distortion_type: String,
    pub distortion_level: Option<u32>,
    pub mos: f64,
    pub mos_std: Option<f64>,
    pub vote_count: Option<u32>,
    pub category: Option<Category>,
}

/// Load result: usable records plus a human-readable summary of rows that
/// were dropped (missing images and the like).
#[derive(Debug, Clone, Default)]
pub struct ManifestLoad {
    pub records: Vec<SubjectiveRecord>,
    pub warnings: Vec<String>,
}

/// TID2013 distortion types in file order (types 1..=24).
const TID13_TYPES: [(&str, Category); 24] = [
    ("additive_gaussian_noise", Category::Noise),
    ("additive_noise_in_color_components", Category::Noise),
    ("spatially_correlated_noise", Category::Noise),
    ("masked_noise", Category::Noise),
    ("high_frequency_noise", Category::Noise),
    ("impulse_noise", Category::Noise),
    ("quantization_noise", Category::Noise),
    ("gaussian_blur", Category::Blur),
    ("image_denoising", Category::Noise),
    ("jpeg_compression", Category::Compression),
    ("jpeg2000_compression", Category::Compression),
    ("jpeg_transmission_errors", Category::Communication),
    ("jpeg2000_transmission_errors", Category::Communication),
    ("non_eccentricity_pattern_noise", Category::Local),
    ("local_blockwise_distortions", Category::Local),
    ("mean_shift", Category::Global),
    ("contrast_change", Category::Global),
    ("change_of_color_saturation", Category::Color),
    ("multiplicative_gaussian_noise", Category::Noise),
    ("comfort_noise", Category::Noise),
    // Listed under both Compression and Noise in the source taxonomy;
    // assigned to Compression here since records carry a single category.
    ("lossy_compression_of_noisy_images", Category::Compression),
    ("color_quantization_with_dither", Category::Color),
    ("chromatic_aberrations", Category::Color),
    ("sparse_sampling_and_reconstruction", Category::Blur),
];

/// Classifies a TID2013 distortion type number (1..=24).
pub fn tid13_type_info(type_number: u32) -> Option<(&'static str, Category)> {
    TID13_TYPES.get(type_number as usize - 1).copied()
}

/// Parses a TID2013 distorted-image name `iRR_TT_L` into
/// (reference id, type number, level).
pub fn parse_tid13_name(stem: &str) -> Option<(String, u32, u32)> {
    let lower = stem.to_ascii_lowercase();
    let mut parts = lower.split('_');
    let reference = parts.next()?;
    let type_number: u32 = parts.next()?.parse().ok()?;
    let level: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || !reference.starts_with('i') || reference.len() < 2 {
        return None;
    }
    Some((reference.to_string(), type_number, level))
}

// Resolves an image name against a directory, trying the literal name and
// then decodable extensions (TID13 ships BMPs, which the raster layer does
// not read; converted .ppm/.png siblings are picked up automatically).
fn resolve_image(dir: &Path, name: &str) -> Option<PathBuf> {
    let literal = dir.join(name);
    let stem = Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    let mut candidates = vec![literal];
    for stem_variant in [stem.to_ascii_lowercase(), stem.to_ascii_uppercase(), stem] {
        for ext in ["ppm", "png"] {
            candidates.push(dir.join(format!("{stem_variant}.{ext}")));
        }
    }
    candidates.into_iter().find(|p| {
        p.is_file()
            && p.extension()
                .map(|e| {
                    let e = e.to_ascii_lowercase();
                    e == "ppm" || e == "png"
                })
                .unwrap_or(false)
    })
}

/// Loads the TID2013 layout: `<root>/mos_with_names.txt` with lines
/// `<mos> <iRR_TT_L.bmp>`, images under `reference_images/` and
/// `distorted_images/`. Per-image MOS standard deviations and vote counts
/// are not distributed with TID13, so those fields stay absent.
pub fn load_tid13(root: impl AsRef<Path>) -> Result<ManifestLoad> {
    let root = root.as_ref();
    let mos_path = root.join("mos_with_names.txt");
    let text = fs::read_to_string(&mos_path).map_err(|e| IqaError::io(&mos_path, e))?;
    let ref_dir = root.join("reference_images");
    let dist_dir = root.join("distorted_images");

    let mut load = ManifestLoad::default();
    for (line_idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(IqaError::ManifestParse {
                    path: mos_path.clone(),
                    line: line_idx + 1,
                    detail: format!("expected '<mos> <name>', got '{line}'"),
                })
            }
        };
        // Either token order is seen in the wild.
        let (mos, name) = match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(m), Err(_)) => (m, b),
            (Err(_), Ok(m)) => (m, a),
            _ => {
                return Err(IqaError::ManifestParse {
                    path: mos_path.clone(),
                    line: line_idx + 1,
                    detail: format!("cannot tell mos from image name in '{line}'"),
                })
            }
        };
        let stem = Path::new(name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.to_string());
        let Some((reference_id, type_number, level)) = parse_tid13_name(&stem) else {
            load.warnings
                .push(format!("line {}: unrecognized name '{name}'", line_idx + 1));
            continue;
        };
        let Some((type_name, category)) = tid13_type_info(type_number) else {
            load.warnings.push(format!(
                "line {}: type {type_number} outside 1..=24 in '{name}'",
                line_idx + 1
            ));
            continue;
        };
        let Some(reference_path) = resolve_image(&ref_dir, &format!("{reference_id}.bmp")) else {
            load.warnings
                .push(format!("missing reference image for '{reference_id}'"));
            continue;
        };
        let Some(distorted_path) = resolve_image(&dist_dir, name) else {
            load.warnings.push(format!("missing distorted image '{name}'"));
            continue;
        };
        load.records.push(SubjectiveRecord {
            reference_id,
            reference_path,
            distorted_path,
            distortion_type: type_name.to_string(),
            distortion_level: Some(level),
            mos,
            mos_std: None,
            vote_count: None,
            category: Some(category),
        });
    }
    Ok(load)
}

fn optional_field(field: &str) -> Option<&str> {
    let trimmed = field.trim();
    (!trimmed.is_empty()).then_some(trimmed)
}

/// Loads a CSV manifest with header
/// `ref,dist,type,level,mos,mos_std,votes,category`. Image paths resolve
/// relative to the manifest's directory; rows whose images are missing are
/// dropped into the warning summary.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<ManifestLoad> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                IqaError::io(path, std::io::Error::other(e.to_string()))
            }
            _ => IqaError::ManifestParse {
                path: path.to_path_buf(),
                line: 0,
                detail: e.to_string(),
            },
        })?;

    let expected = ["ref", "dist", "type", "level", "mos", "mos_std", "votes", "category"];
    {
        let headers = reader.headers().map_err(|e| IqaError::ManifestParse {
            path: path.to_path_buf(),
            line: 1,
            detail: e.to_string(),
        })?;
        let got: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
        if got != expected {
            return Err(IqaError::ManifestParse {
                path: path.to_path_buf(),
                line: 1,
                detail: format!("expected header {expected:?}, got {got:?}"),
            });
        }
    }

    let mut load = ManifestLoad::default();
    for result in reader.records() {
        let row = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            IqaError::ManifestParse {
                path: path.to_path_buf(),
                line,
                detail: e.to_string(),
            }
        })?;
        let line = row
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let parse_err = |detail: String| IqaError::ManifestParse {
            path: path.to_path_buf(),
            line,
            detail,
        };

        let ref_field = row.get(0).unwrap_or_default().trim().to_string();
        let dist_field = row.get(1).unwrap_or_default().trim().to_string();
        if ref_field.is_empty() || dist_field.is_empty() {
            return Err(parse_err("empty ref or dist field".into()));
        }
        let mos: f64 = row
            .get(4)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad mos '{}'", row.get(4).unwrap_or_default())))?;
        if !mos.is_finite() {
            return Err(parse_err(format!("non-finite mos {mos}")));
        }
        let distortion_level = match optional_field(row.get(3).unwrap_or_default()) {
            Some(v) => Some(
                v.parse::<u32>()
                    .map_err(|_| parse_err(format!("bad level '{v}'")))?,
            ),
            None => None,
        };
        let mos_std = match optional_field(row.get(5).unwrap_or_default()) {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad mos_std '{v}'")))?,
            ),
            None => None,
        };
        let vote_count = match optional_field(row.get(6).unwrap_or_default()) {
            Some(v) => {
                let votes: u32 = v
                    .parse()
                    .map_err(|_| parse_err(format!("bad votes '{v}'")))?;
                if votes == 0 {
                    return Err(parse_err("votes must be >= 1 when present".into()));
                }
                Some(votes)
            }
            None => None,
        };
        let category = match optional_field(row.get(7).unwrap_or_default()) {
            Some(v) => Some(
                Category::parse(v).ok_or_else(|| parse_err(format!("unknown category '{v}'")))?,
            ),
            None => None,
        };

        let reference_path = base.join(&ref_field);
        let distorted_path = base.join(&dist_field);
        let mut missing = Vec::new();
        if !reference_path.is_file() {
            missing.push(reference_path.display().to_string());
        }
        if !distorted_path.is_file() {
            missing.push(distorted_path.display().to_string());
        }
        if !missing.is_empty() {
            load.warnings
                .push(format!("line {line}: missing image(s) {}", missing.join(", ")));
            continue;
        }

        load.records.push(SubjectiveRecord {
            reference_id: ref_field,
            reference_path,
            distorted_path,
            distortion_type: row.get(2).unwrap_or_default().trim().to_string(),
            distortion_level,
            mos,
            mos_std,
            vote_count,
            category,
        });
    }
    if load.records.is_empty() {
        load.warnings.push("manifest yielded no usable records".into());
    }
    Ok(load)
}

/// Dispatches on the path: directories load as TID2013 roots, files as CSV
/// manifests.
pub fn load_any(path: impl AsRef<Path>) -> Result<ManifestLoad> {
    let path = path.as_ref();
    if path.is_dir() {
        load_tid13(path)
    } else {
        load_manifest(path)
    }
}

/// Distinct categories present, in fixed enum order.
pub fn categories_present(records: &[SubjectiveRecord]) -> Vec<Category> {
    let set: BTreeSet<Category> = records.iter().filter_map(|r| r.category).collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn tid13_name_parsing() {
        assert_eq!(
            parse_tid13_name("i02_08_4"),
            Some(("i02".to_string(), 8, 4))
        );
        assert_eq!(
            parse_tid13_name("I25_24_5"),
            Some(("i25".to_string(), 24, 5))
        );
        assert_eq!(parse_tid13_name("foo_bar"), None);
        assert_eq!(parse_tid13_name("i01_xx_3"), None);
    }

    #[test]
    fn tid13_blur_example_classifies() {
        let (name, category) = tid13_type_info(8).unwrap();
        assert_eq!(name, "gaussian_blur");
        assert_eq!(category, Category::Blur);
        // Category sizes implied by the taxonomy: 125 images per type.
        let count = |c: Category| TID13_TYPES.iter().filter(|(_, k)| *k == c).count();
        assert_eq!(count(Category::Compression) * 125, 375);
        assert_eq!(count(Category::Communication) * 125, 250);
        assert_eq!(count(Category::Blur) * 125, 250);
        assert_eq!(count(Category::Color) * 125, 375);
        assert_eq!(count(Category::Global) * 125, 250);
        assert_eq!(count(Category::Local) * 125, 250);
    }

    fn tiny_ppm(path: &Path) {
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[128u8; 12]);
        std::fs::write(path, data).unwrap();
    }

    #[test]
    fn csv_row_fully_populates_record() {
        let dir = tempfile::tempdir().unwrap();
        tiny_ppm(&dir.path().join("ref01.ppm"));
        tiny_ppm(&dir.path().join("dist01.ppm"));
        let manifest = dir.path().join("m.csv");
        let mut f = std::fs::File::create(&manifest).unwrap();
        writeln!(f, "ref,dist,type,level,mos,mos_std,votes,category").unwrap();
        writeln!(f, "ref01.ppm,dist01.ppm,noise,3,5.42,0.61,28,Noise").unwrap();
        drop(f);
        let load = load_manifest(&manifest).unwrap();
        assert_eq!(load.records.len(), 1);
        let r = &load.records[0];
        assert_eq!(r.reference_id, "ref01.ppm");
        assert_eq!(r.distortion_type, "noise");
        assert_eq!(r.distortion_level, Some(3));
        assert_eq!(r.mos, 5.42);
        assert_eq!(r.mos_std, Some(0.61));
        assert_eq!(r.vote_count, Some(28));
        assert_eq!(r.category, Some(Category::Noise));
    }

    #[test]
    fn csv_missing_image_drops_row_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        tiny_ppm(&dir.path().join("ref01.ppm"));
        let manifest = dir.path().join("m.csv");
        std::fs::write(
            &manifest,
            "ref,dist,type,level,mos,mos_std,votes,category\nref01.ppm,gone.ppm,noise,,4.0,,,\n",
        )
        .unwrap();
        let load = load_manifest(&manifest).unwrap();
        assert!(load.records.is_empty());
        assert!(load.warnings.iter().any(|w| w.contains("gone.ppm")));
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        tiny_ppm(&dir.path().join("a.ppm"));
        let manifest = dir.path().join("m.csv");
        std::fs::write(
            &manifest,
            "ref,dist,type,level,mos,mos_std,votes,category\na.ppm,a.ppm,noise,,not_a_number,,,\n",
        )
        .unwrap();
        let err = load_manifest(&manifest).unwrap_err();
        match err {
            IqaError::ManifestParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_manifest_warns() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.csv");
        std::fs::write(&manifest, "ref,dist,type,level,mos,mos_std,votes,category\n").unwrap();
        let load = load_manifest(&manifest).unwrap();
        assert!(load.records.is_empty());
        assert!(!load.warnings.is_empty());
    }

    #[test]
    fn tid13_layout_loads_converted_images() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("reference_images")).unwrap();
        std::fs::create_dir(dir.path().join("distorted_images")).unwrap();
        tiny_ppm(&dir.path().join("reference_images/i02.ppm"));
        tiny_ppm(&dir.path().join("distorted_images/i02_08_4.ppm"));
        std::fs::write(
            dir.path().join("mos_with_names.txt"),
            "5.214 i02_08_4.bmp\n4.123 i02_09_1.bmp\n",
        )
        .unwrap();
        let load = load_tid13(dir.path()).unwrap();
        assert_eq!(load.records.len(), 1);
        let r = &load.records[0];
        assert_eq!(r.reference_id, "i02");
        assert_eq!(r.distortion_type, "gaussian_blur");
        assert_eq!(r.distortion_level, Some(4));
        assert_eq!(r.category, Some(Category::Blur));
        assert_eq!(r.mos, 5.214);
        assert_eq!(load.warnings.len(), 1, "{:?}", load.warnings);
    }

    #[test]
    fn quoted_csv_fields_are_accepted() {
        let dir = tempfile::tempdir().unwrap();
        tiny_ppm(&dir.path().join("r.ppm"));
        tiny_ppm(&dir.path().join("d.ppm"));
        let manifest = dir.path().join("m.csv");
        std::fs::write(
            &manifest,
            "ref,dist,type,level,mos,mos_std,votes,category\n\"r.ppm\",\"d.ppm\",\"jpeg, lossy\",2,3.5,,,Compression\n",
        )
        .unwrap();
        let load = load_manifest(&manifest).unwrap();
        assert_eq!(load.records.len(), 1);
        assert_eq!(load.records[0].distortion_type, "jpeg, lossy");
    }
}
