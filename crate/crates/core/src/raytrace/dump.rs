use std::io::Write;

use super::{Interaction, PropagationPath};

/// Interaction sequence as text: `LOS`, or `R`/`D` joined by `-`.
pub fn path_kind(p: &PropagationPath) -> String {
    if p.is_los() {
        return "LOS".into();
    }
    p.interactions
        .iter()
        .map(|i| match i {
            Interaction::Reflection { .. } => "R",
            Interaction::Diffraction { .. } => "D",
        })
        .collect::<Vec<_>>()
        .join("-")
}

/// One CSV row per path; angles in degrees, gain polarization-averaged.
pub fn write_paths_csv<W: Write>(paths: &[PropagationPath], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "type",
        "length_m",
        "delay_ns",
        "gain_db",
        "aod_theta_deg",
        "aod_phi_deg",
        "aoa_theta_deg",
        "aoa_phi_deg",
    ])?;
    for p in paths {
        w.write_record([
            path_kind(p),
            format!("{:?}", p.length),
            format!("{:?}", p.delay_s * 1e9),
            format!("{:?}", p.gain_db()),
            format!("{:?}", p.departure.0.to_degrees()),
            format!("{:?}", p.departure.1.to_degrees()),
            format!("{:?}", p.arrival.0.to_degrees()),
            format!("{:?}", p.arrival.1.to_degrees()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
