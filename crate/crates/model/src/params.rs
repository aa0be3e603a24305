//! Seeded parameter creation. Every trainable tensor is a named `Var` in one `VarMap`.

use candle_core::{DType, Device, Tensor, Var};
use candle_nn::VarMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

pub struct ParamStore {
    varmap: VarMap,
    rng: ChaCha8Rng,
    dtype: DType,
    device: Device,
}

impl ParamStore {
    pub fn new(seed: u64, precision: Precision) -> Self {
        Self {
            varmap: VarMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            dtype: precision.dtype(),
            device: Device::Cpu,
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    pub fn into_varmap(self) -> VarMap {
        self.varmap
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform(&mut self, name: &str, shape: &[usize], bound: f64) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        let values: Vec<f64> = (0..count).map(|_| self.rng.gen_range(-bound..=bound)).collect();
        self.insert(name, Tensor::from_vec(values, shape, &self.device)?)
    }

    /// Uniform with the variance of a normal of standard deviation `std`.
    pub fn normal_like(&mut self, name: &str, shape: &[usize], std: f64) -> Result<Tensor> {
        self.uniform(name, shape, std * 3f64.sqrt())
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<Tensor> {
        let t = Tensor::zeros(shape, DType::F64, &self.device)?;
        self.insert(name, t)
    }

    pub fn ones(&mut self, name: &str, shape: &[usize]) -> Result<Tensor> {
        let t = Tensor::ones(shape, DType::F64, &self.device)?;
        self.insert(name, t)
    }

    /// Registers an explicit value (converted to the store's dtype).
    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<Tensor> {
        let var = Var::from_tensor(&value.to_dtype(self.dtype)?)?;
        let tensor = var.as_tensor().clone();
        self.varmap
            .data()
            .lock()
            .expect("varmap lock poisoned")
            .insert(name.to_string(), var);
        Ok(tensor)
    }

    /// Linear layer with PyTorch-style fan-in initialisation.
    pub fn linear(&mut self, prefix: &str, in_dim: usize, out_dim: usize) -> Result<candle_nn::Linear> {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let w = self.uniform(&format!("{prefix}.weight"), &[out_dim, in_dim], bound)?;
        let b = self.uniform(&format!("{prefix}.bias"), &[out_dim], bound)?;
        Ok(candle_nn::Linear::new(w, Some(b)))
    }
}

/// Sorted `(name, tensor)` snapshot of every variable, detached copies.
pub fn snapshot(varmap: &VarMap) -> Result<Vec<(String, Tensor)>> {
    let data = varmap.data().lock().expect("varmap lock poisoned");
    let mut out: Vec<(String, Tensor)> = data
        .iter()
        .map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?)))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn restore(varmap: &VarMap, values: &[(String, Tensor)]) -> Result<()> {
    let data = varmap.data().lock().expect("varmap lock poisoned");
    for (name, value) in values {
        if let Some(var) = data.get(name) {
            var.set(value)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_values() {
        let mut a = ParamStore::new(7, Precision::F64);
        let mut b = ParamStore::new(7, Precision::F64);
        let ta: Vec<f64> = a
            .uniform("w", &[3, 2], 0.5)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        let tb: Vec<f64> = b
            .uniform("w", &[3, 2], 0.5)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        assert_eq!(ta, tb);
        assert!(ta.iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn snapshot_restore_round_trip() {
        let mut store = ParamStore::new(1, Precision::F32);
        let w = store.uniform("w", &[4], 1.0).unwrap();
        let snap = snapshot(store.varmap()).unwrap();
        let var = store.varmap().data().lock().unwrap().get("w").unwrap().clone();
        var.set(&Tensor::zeros(4, DType::F32, &Device::Cpu).unwrap()).unwrap();
        assert_eq!(w.to_vec1::<f32>().unwrap(), vec![0.0; 4]);
        restore(store.varmap(), &snap).unwrap();
        assert_eq!(w.to_vec1::<f32>().unwrap(), snap[0].1.to_vec1::<f32>().unwrap());
    }
}
