use std::io::Write;
use std::path::Path;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::numeric::{pca_fit, pca_transform, Matrix, PcaModel};

/// Leading variance at or below this counts as rank 0.
const RANK_ZERO: f64 = 1e-12;

/// Two-component PCA of `data` and the projected rows.
pub fn pca_points(data: &FeatureMatrix) -> Result<(PcaModel, Matrix)> {
    if data.n_rows() < 2 || data.n_features() < 2 {
        return Err(Error::domain(format!(
            "PCA export needs at least 2 rows and 2 features, got {} x {}",
            data.n_rows(),
            data.n_features()
        )));
    }
    let model = pca_fit(data.features(), 2)?;
    if model.explained_variance[0] <= RANK_ZERO {
        return Err(Error::domain("all rows are identical; PCA has rank 0"));
    }
    let projected = pca_transform(&model, data.features())?;
    Ok((model, projected))
}

pub(crate) fn write_pca<W: Write>(data: &FeatureMatrix, out: W) -> Result<PcaModel> {
    let (model, points) = pca_points(data)?;
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::validation(format!("writing PCA CSV: {e}"));
    w.write_record(["pc1", "pc2", "label"]).map_err(err)?;
    for (row, label) in points.iter_rows().zip(data.labels()) {
        w.write_record([row[0].to_string(), row[1].to_string(), label.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::validation(format!("writing PCA CSV: {e}")))?;
    Ok(model)
}

/// Writes `pc1,pc2,label` rows for every row of `data` (already scaled).
pub fn export_pca(data: &FeatureMatrix, out: &Path) -> Result<PcaModel> {
    let mut buf = Vec::new();
    let model = write_pca(data, &mut buf)?;
    std::fs::write(out, buf).map_err(|e| Error::io(out, e))?;
    Ok(model)
}
