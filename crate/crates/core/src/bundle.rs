//! URDF asset bundle assembly.
//!
//! Fixed layout under the bundle root: `meshes/asset.obj` (plus its
//! material file binding the texture), `textures/albedo.png`, `asset.urdf`
//! and `metadata.json`. Writes stage into a temp directory and rename into
//! place so failures never leave partial bundles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bake::BakedTexture;
use crate::error::{Error, Result};
use crate::img::save_gray_png;
use crate::inspect::{CheckReport, PipelineRun};
use crate::mesh::{obj, validate_mesh, InertiaTensor, TriangleMesh, ValidationReport};
use crate::physics::PhysicalProperties;

pub const MESH_REL_PATH: &str = "meshes/asset.obj";
pub const MTL_REL_PATH: &str = "meshes/asset.mtl";
pub const TEXTURE_REL_PATH: &str = "textures/albedo.png";
pub const HOLE_MASK_REL_PATH: &str = "textures/hole_mask.png";
pub const URDF_REL_PATH: &str = "asset.urdf";
pub const METADATA_REL_PATH: &str = "metadata.json";

pub const TOOL_NAME: &str = "simforge";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A packaged asset: file layout plus the physical and inspection metadata
/// persisted in `metadata.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetBundle {
    pub mesh_path: String,
    pub texture_path: String,
    pub urdf_path: String,
    pub metadata_path: String,
    pub properties: PhysicalProperties,
    pub inertia: InertiaTensor,
    pub validation: ValidationReport,
    pub reports: Vec<CheckReport>,
}

/// Run provenance persisted alongside the asset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineRun>,
    /// Unix seconds; omitted entirely for reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ToolInfo {
    name: String,
    version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AssetPaths {
    mesh: String,
    texture: String,
    urdf: String,
}

/// The single source of truth for non-URDF fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Metadata {
    tool: ToolInfo,
    asset: AssetPaths,
    properties: PhysicalProperties,
    inertia: InertiaTensor,
    validation: ValidationReport,
    checks: Vec<CheckReport>,
    provenance: Provenance,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Emit the single-link URDF document for a bundle.
///
/// Refuses non-watertight geometry and non-positive mass. Inertia entries
/// are printed with shortest round-trip formatting, so parsing them back
/// yields bit-identical values.
pub fn emit_urdf(bundle: &AssetBundle) -> Result<String> {
    if !bundle.validation.watertight {
        return Err(Error::NotWatertight);
    }
    if !(bundle.inertia.mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "URDF requires positive mass, got {}",
            bundle.inertia.mass
        )));
    }
    bundle.properties.validate()?;

    let mesh = xml_escape(&bundle.mesh_path);
    let m = &bundle.inertia.moments;
    let com = &bundle.inertia.center_of_mass;
    let mut urdf = String::new();
    let _ = writeln!(urdf, r#"<?xml version="1.0"?>"#);
    let _ = writeln!(urdf, r#"<robot name="asset">"#);
    let _ = writeln!(urdf, r#"  <link name="base_link">"#);
    for element in ["visual", "collision"] {
        let _ = writeln!(urdf, r#"    <{element}>"#);
        let _ = writeln!(urdf, r#"      <origin xyz="0 0 0" rpy="0 0 0"/>"#);
        let _ = writeln!(urdf, r#"      <geometry>"#);
        let _ = writeln!(urdf, r#"        <mesh filename="{mesh}" scale="1 1 1"/>"#);
        let _ = writeln!(urdf, r#"      </geometry>"#);
        let _ = writeln!(urdf, r#"    </{element}>"#);
    }
    let _ = writeln!(urdf, r#"    <inertial>"#);
    let _ = writeln!(
        urdf,
        r#"      <origin xyz="{} {} {}" rpy="0 0 0"/>"#,
        com.x, com.y, com.z
    );
    let _ = writeln!(urdf, r#"      <mass value="{}"/>"#, bundle.inertia.mass);
    let _ = writeln!(
        urdf,
        r#"      <inertia ixx="{}" ixy="{}" ixz="{}" iyy="{}" iyz="{}" izz="{}"/>"#,
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 2)]
    );
    let _ = writeln!(urdf, r#"    </inertial>"#);
    let _ = writeln!(urdf, r#"    <contact>"#);
    let _ = writeln!(
        urdf,
        r#"      <lateral_friction value="{}"/>"#,
        bundle.properties.friction
    );
    let _ = writeln!(urdf, r#"    </contact>"#);
    let _ = writeln!(urdf, r#"  </link>"#);
    let _ = writeln!(urdf, r#"</robot>"#);
    Ok(urdf)
}

/// Everything needed to persist one asset.
pub struct BundleContents<'a> {
    pub mesh: &'a TriangleMesh,
    pub texture: Option<&'a BakedTexture>,
    pub properties: PhysicalProperties,
    pub inertia: InertiaTensor,
    pub reports: Vec<CheckReport>,
    pub provenance: Provenance,
}

/// Write the fixed bundle layout into `out_dir` (staged atomically).
/// Existing directories are only replaced when `overwrite` is set.
pub fn write_bundle(
    contents: &BundleContents,
    out_dir: impl AsRef<Path>,
    overwrite: bool,
) -> Result<AssetBundle> {
    let out_dir = out_dir.as_ref();
    let texture = contents
        .texture
        .ok_or_else(|| Error::InvalidInput("texture required".into()))?;
    if contents.mesh.uvs.is_none() {
        return Err(Error::InvalidInput(
            "bundle mesh must carry UVs to bind the texture".into(),
        ));
    }
    if out_dir.exists() && !overwrite {
        return Err(Error::InvalidInput(format!(
            "output directory {} exists; pass overwrite to replace it",
            out_dir.display()
        )));
    }

    let validation = validate_mesh(contents.mesh);
    let bundle = AssetBundle {
        mesh_path: MESH_REL_PATH.to_string(),
        texture_path: TEXTURE_REL_PATH.to_string(),
        urdf_path: URDF_REL_PATH.to_string(),
        metadata_path: METADATA_REL_PATH.to_string(),
        properties: contents.properties.clone(),
        inertia: contents.inertia.clone(),
        validation,
        reports: contents.reports.clone(),
    };
    let urdf = emit_urdf(&bundle)?;

    let parent = out_dir
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&parent)?;
    let staging = parent.join(format!(
        ".{}.tmp-{}",
        out_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bundle".to_string()),
        std::process::id()
    ));
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }

    let result = (|| -> Result<()> {
        std::fs::create_dir_all(staging.join("meshes"))?;
        std::fs::create_dir_all(staging.join("textures"))?;

        let obj_text = obj::obj_string(contents.mesh, Some(("asset.mtl", "albedo")));
        std::fs::write(staging.join(MESH_REL_PATH), obj_text)?;
        std::fs::write(
            staging.join(MTL_REL_PATH),
            "newmtl albedo\nKd 1 1 1\nmap_Kd ../textures/albedo.png\n",
        )?;
        texture
            .to_color_image()
            .save_png(staging.join(TEXTURE_REL_PATH))?;
        let hole_values: Vec<f64> = texture
            .hole_mask
            .iter()
            .map(|&h| if h { 1.0 } else { 0.0 })
            .collect();
        save_gray_png(
            staging.join(HOLE_MASK_REL_PATH),
            texture.width,
            texture.height,
            &hole_values,
        )?;
        std::fs::write(staging.join(URDF_REL_PATH), &urdf)?;

        let metadata = Metadata {
            tool: ToolInfo {
                name: TOOL_NAME.to_string(),
                version: TOOL_VERSION.to_string(),
            },
            asset: AssetPaths {
                mesh: bundle.mesh_path.clone(),
                texture: bundle.texture_path.clone(),
                urdf: bundle.urdf_path.clone(),
            },
            properties: bundle.properties.clone(),
            inertia: bundle.inertia.clone(),
            validation: bundle.validation.clone(),
            checks: bundle.reports.clone(),
            provenance: contents.provenance.clone(),
        };
        let json = serde_json::to_string_pretty(&metadata)
            .map_err(|e| Error::Internal(format!("metadata serialization: {e}")))?;
        std::fs::write(staging.join(METADATA_REL_PATH), json + "\n")?;
        Ok(())
    })();

    if let Err(e) = result {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }

    if out_dir.exists() {
        std::fs::remove_dir_all(out_dir)?;
    }
    std::fs::rename(&staging, out_dir)?;
    Ok(bundle)
}

/// Re-read a bundle from disk, verifying the referenced files exist.
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<AssetBundle> {
    let dir = dir.as_ref();
    let metadata_path = dir.join(METADATA_REL_PATH);
    let text = std::fs::read_to_string(&metadata_path)?;
    let metadata: Metadata = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("malformed metadata.json: {e}")))?;
    for rel in [&metadata.asset.mesh, &metadata.asset.texture, &metadata.asset.urdf] {
        if !dir.join(rel).exists() {
            return Err(Error::InvalidInput(format!(
                "bundle file '{rel}' referenced by metadata.json is missing"
            )));
        }
    }
    Ok(AssetBundle {
        mesh_path: metadata.asset.mesh,
        texture_path: metadata.asset.texture,
        urdf_path: metadata.asset.urdf,
        metadata_path: METADATA_REL_PATH.to_string(),
        properties: metadata.properties,
        inertia: metadata.inertia,
        validation: metadata.validation,
        reports: metadata.checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::unit_cube;
    use crate::mesh::{compute_inertia, validate_mesh};

    fn cube_properties() -> PhysicalProperties {
        PhysicalProperties {
            height_m: 1.0,
            mass_kg: 1.2,
            friction: 0.6,
            category: "box".to_string(),
            description: "test cube".to_string(),
        }
    }

    fn cube_bundle() -> AssetBundle {
        let cube = unit_cube();
        AssetBundle {
            mesh_path: MESH_REL_PATH.to_string(),
            texture_path: TEXTURE_REL_PATH.to_string(),
            urdf_path: URDF_REL_PATH.to_string(),
            metadata_path: METADATA_REL_PATH.to_string(),
            properties: cube_properties(),
            inertia: compute_inertia(&cube, 1.2).unwrap(),
            validation: validate_mesh(&cube),
            reports: vec![CheckReport::pass("meshgeo")],
        }
    }

    fn baked_solid(w: usize, h: usize, c: [f64; 3]) -> BakedTexture {
        BakedTexture {
            width: w,
            height: h,
            pixels: vec![c; w * h],
            hole_mask: vec![false; w * h],
        }
    }

    #[test]
    fn urdf_carries_mass_and_cube_inertia() {
        let urdf = emit_urdf(&cube_bundle()).unwrap();
        assert!(urdf.contains(r#"<mass value="1.2"/>"#));
        // 1.2 / 6 per diagonal entry.
        let expected = 1.2 / 6.0;
        assert!(urdf.contains(&format!(r#"ixx="{expected}""#)));
        assert!(urdf.contains(&format!(r#"izz="{expected}""#)));
    }

    #[test]
    fn urdf_parses_with_one_link_and_verbatim_mesh_path() {
        let urdf = emit_urdf(&cube_bundle()).unwrap();
        let doc = roxmltree::Document::parse(&urdf).unwrap();
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "robot");
        let links: Vec<_> = root
            .children()
            .filter(|n| n.has_tag_name("link"))
            .collect();
        assert_eq!(links.len(), 1);
        let meshes: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("mesh"))
            .collect();
        assert_eq!(meshes.len(), 2, "visual and collision");
        for mesh in meshes {
            assert_eq!(mesh.attribute("filename"), Some("meshes/asset.obj"));
        }
    }

    #[test]
    fn urdf_inertia_round_trips_bit_for_bit() {
        let bundle = cube_bundle();
        let urdf = emit_urdf(&bundle).unwrap();
        let doc = roxmltree::Document::parse(&urdf).unwrap();
        let inertia_node = doc
            .descendants()
            .find(|n| n.has_tag_name("inertia"))
            .unwrap();
        let m = &bundle.inertia.moments;
        for (attr, expected) in [
            ("ixx", m[(0, 0)]),
            ("ixy", m[(0, 1)]),
            ("ixz", m[(0, 2)]),
            ("iyy", m[(1, 1)]),
            ("iyz", m[(1, 2)]),
            ("izz", m[(2, 2)]),
        ] {
            let parsed: f64 = inertia_node.attribute(attr).unwrap().parse().unwrap();
            assert_eq!(parsed.to_bits(), expected.to_bits(), "{attr}");
        }
        let mass: f64 = doc
            .descendants()
            .find(|n| n.has_tag_name("mass"))
            .unwrap()
            .attribute("value")
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(mass.to_bits(), bundle.inertia.mass.to_bits());
    }

    #[test]
    fn urdf_refuses_bad_inputs() {
        let mut open = cube_bundle();
        open.validation.watertight = false;
        assert!(matches!(emit_urdf(&open), Err(Error::NotWatertight)));

        let mut weightless = cube_bundle();
        weightless.inertia.mass = 0.0;
        assert!(emit_urdf(&weightless).is_err());
    }

    #[test]
    fn write_then_read_round_trips_all_fields() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("asset");
        let cube = unit_cube();
        let texture = baked_solid(8, 8, [0.1, 0.8, 0.2]);
        let contents = BundleContents {
            mesh: &cube,
            texture: Some(&texture),
            properties: cube_properties(),
            inertia: compute_inertia(&cube, 1.2).unwrap(),
            reports: vec![CheckReport::pass("meshgeo")],
            provenance: Provenance {
                base_seed: Some(7),
                pipeline: None,
                created_unix: None,
            },
        };
        let written = write_bundle(&contents, &out, false).unwrap();
        let reread = read_bundle(&out).unwrap();
        assert_eq!(written, reread);
        for rel in [MESH_REL_PATH, MTL_REL_PATH, TEXTURE_REL_PATH, URDF_REL_PATH, METADATA_REL_PATH] {
            assert!(out.join(rel).exists(), "{rel} missing");
        }
        // The OBJ must reference the material binding the texture.
        let obj_text = std::fs::read_to_string(out.join(MESH_REL_PATH)).unwrap();
        assert!(obj_text.starts_with("mtllib asset.mtl"));
    }

    #[test]
    fn metadata_records_category_and_description() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("asset");
        let cube = unit_cube();
        let texture = baked_solid(4, 4, [0.5; 3]);
        let contents = BundleContents {
            mesh: &cube,
            texture: Some(&texture),
            properties: cube_properties(),
            inertia: compute_inertia(&cube, 1.2).unwrap(),
            reports: Vec::new(),
            provenance: Provenance::default(),
        };
        write_bundle(&contents, &out, false).unwrap();
        let text = std::fs::read_to_string(out.join(METADATA_REL_PATH)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["properties"]["category"], "box");
        assert_eq!(json["properties"]["description"], "test cube");
        assert!(json.get("provenance").is_some());
    }

    #[test]
    fn missing_texture_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cube = unit_cube();
        let contents = BundleContents {
            mesh: &cube,
            texture: None,
            properties: cube_properties(),
            inertia: compute_inertia(&cube, 1.2).unwrap(),
            reports: Vec::new(),
            provenance: Provenance::default(),
        };
        let err = write_bundle(&contents, dir.path().join("asset"), false).unwrap_err();
        assert!(err.to_string().contains("texture required"));
    }

    #[test]
    fn overwrite_requires_explicit_flag() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("asset");
        let cube = unit_cube();
        let texture = baked_solid(4, 4, [0.5; 3]);
        let contents = BundleContents {
            mesh: &cube,
            texture: Some(&texture),
            properties: cube_properties(),
            inertia: compute_inertia(&cube, 1.2).unwrap(),
            reports: Vec::new(),
            provenance: Provenance::default(),
        };
        write_bundle(&contents, &out, false).unwrap();
        let err = write_bundle(&contents, &out, false).unwrap_err();
        assert!(err.to_string().contains("exists"));
        write_bundle(&contents, &out, true).unwrap();
    }

    #[test]
    fn failed_write_leaves_no_partial_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("asset");
        let mut open_cube = unit_cube();
        open_cube.faces.pop(); // no longer watertight -> emit_urdf refuses
        let texture = baked_solid(4, 4, [0.5; 3]);
        let contents = BundleContents {
            mesh: &open_cube,
            texture: Some(&texture),
            properties: cube_properties(),
            inertia: compute_inertia(&unit_cube(), 1.2).unwrap(),
            reports: Vec::new(),
            provenance: Provenance::default(),
        };
        assert!(write_bundle(&contents, &out, false).is_err());
        assert!(!out.exists());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }
}
