//! Plain-text model files.
//!
//! ```text
//! # dgl-model v1
//! kind svm
//! sigma 1.0
//! lambda1 10.0
//! lambda2 0.001
//! features <m> <n>
//! <m rows of n values>
//! alpha <n> <C>
//! <n rows of C values>
//! bias <C>
//! <C values>
//! ```
//!
//! Matrices are written row-major, one row per line, with enough digits to
//! round-trip exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use super::{AdaptiveModel, KernelConfig, ModelKind, RegularizationConfig};
use crate::error::{DglError, Result};
use crate::scalar::Real;

const HEADER: &str = "# dgl-model v1";

pub fn write_model<T: Real, W: Write>(model: &AdaptiveModel<T>, mut out: W) -> Result<()> {
    let mut text = String::new();
    let f = |v: T| format!("{:?}", v.as_f64());
    writeln!(text, "{HEADER}").ok();
    writeln!(text, "kind {}", model.kind.as_str()).ok();
    writeln!(text, "sigma {}", f(model.kernel.bandwidth())).ok();
    writeln!(text, "lambda1 {}", f(model.regularization.lambda1())).ok();
    writeln!(text, "lambda2 {}", f(model.regularization.lambda2())).ok();
    let mut matrix = |name: &str, m: &DMatrix<T>| {
        writeln!(text, "{name} {} {}", m.nrows(), m.ncols()).ok();
        for row in m.row_iter() {
            let line: Vec<String> = row.iter().map(|v| f(*v)).collect();
            writeln!(text, "{}", line.join(" ")).ok();
        }
    };
    matrix("features", &model.training_features);
    matrix("alpha", &model.coefficients);
    writeln!(text, "bias {}", model.bias.len()).ok();
    let line: Vec<String> = model.bias.iter().map(|v| f(*v)).collect();
    writeln!(text, "{}", line.join(" ")).ok();
    out.write_all(text.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.number += 1;
            match self.inner.next() {
                Some(line) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if !trimmed.is_empty() && !trimmed.starts_with('#') {
                        return Ok(trimmed.to_string());
                    }
                }
                None => return Err(self.error("unexpected end of model file")),
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> DglError {
        DglError::Parse {
            line: self.number,
            message: message.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn number<T: Real>(&self, token: &str) -> Result<T> {
        let v: f64 = token
            .parse()
            .map_err(|_| self.error(format!("invalid number `{token}`")))?;
        if !v.is_finite() {
            return Err(self.error("non-finite value"));
        }
        Ok(T::lit(v))
    }

    fn scalar<T: Real>(&mut self, key: &str) -> Result<T> {
        let parts = self.keyed(key)?;
        match parts.as_slice() {
            [v] => self.number(v),
            _ => Err(self.error(format!("`{key}` takes one value"))),
        }
    }

    fn dims(&self, parts: &[String], count: usize) -> Result<Vec<usize>> {
        if parts.len() != count {
            return Err(self.error(format!("expected {count} dimensions")));
        }
        parts
            .iter()
            .map(|p| p.parse().map_err(|_| self.error(format!("invalid size `{p}`"))))
            .collect()
    }

    fn row<T: Real>(&mut self, width: usize) -> Result<Vec<T>> {
        let line = self.next_line()?;
        let values = line
            .split_whitespace()
            .map(|t| self.number(t))
            .collect::<Result<Vec<T>>>()?;
        if values.len() != width {
            return Err(self.error(format!("expected {width} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn matrix<T: Real>(&mut self, key: &str) -> Result<DMatrix<T>> {
        let parts = self.keyed(key)?;
        let dims = self.dims(&parts, 2)?;
        let (rows, cols) = (dims[0], dims[1]);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row::<T>(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn read_model<T: Real, R: BufRead>(input: R) -> Result<AdaptiveModel<T>> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let first = lines.inner.next().transpose()?;
    match first {
        Some(first) if first.trim() == HEADER => lines.number = 1,
        _ => {
            return Err(DglError::Parse {
                line: 1,
                message: format!("missing `{HEADER}` header"),
            })
        }
    }
    let kind = match lines.keyed("kind")?.as_slice() {
        [k] if k == "rls" => ModelKind::Rls,
        [k] if k == "svm" => ModelKind::Svm,
        _ => return Err(lines.error("kind must be `rls` or `svm`")),
    };
    let sigma = lines.scalar::<T>("sigma")?;
    let lambda1 = lines.scalar::<T>("lambda1")?;
    let lambda2 = lines.scalar::<T>("lambda2")?;
    let features = lines.matrix::<T>("features")?;
    let alpha = lines.matrix::<T>("alpha")?;
    let parts = lines.keyed("bias")?;
    let classes = lines.dims(&parts, 1)?[0];
    let bias = DVector::from_vec(lines.row::<T>(classes)?);
    AdaptiveModel::from_parts(
        kind,
        alpha,
        bias,
        features,
        KernelConfig::new(sigma)?,
        RegularizationConfig::new(lambda1, lambda2)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn round_trip_is_exact() {
        let model = AdaptiveModel::from_parts(
            ModelKind::Svm,
            dmatrix![0.1, -1.0 / 3.0; 2.5e-17, 7.0; 1.0, 0.0],
            dvector![0.25, -0.125],
            dmatrix![1.0, 2.0, 3.0; -0.1, 0.2, 1e10],
            KernelConfig::new(0.7).unwrap(),
            RegularizationConfig::new(10.0, 0.001).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back: AdaptiveModel<f64> = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_bad_header_and_rows() {
        assert!(read_model::<f64, _>("kind rls\n".as_bytes()).is_err());
        let text = "# dgl-model v1\nkind rls\nsigma 1\nlambda1 1\nlambda2 0\nfeatures 1 2\n1.0\n";
        let err = read_model::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DglError::Parse { line: 7, .. }), "{err}");
    }
}
