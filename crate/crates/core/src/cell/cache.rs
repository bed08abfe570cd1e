use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::tensor::Vec3;

/// Lattice key of a quantized `(t, x)` sample.
pub type SampleKey = [i64; 4];

/// Quantization of `(t, x)` samples. A zero step collapses that coordinate,
/// so time-independent or position-independent data share one entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    pub time_step: f64,
    pub space_step: f64,
}

impl Quantizer {
    pub fn key(&self, t: f64, x: &Vec3) -> SampleKey {
        let q = |v: f64, h: f64| if h > 0.0 { (v / h).round() as i64 } else { 0 };
        [q(t, self.time_step), q(x[0], self.space_step), q(x[1], self.space_step), q(x[2], self.space_step)]
    }

    /// The representative sample of a key; all values are computed there so
    /// results never depend on which caller arrived first.
    pub fn representative(&self, key: &SampleKey, t: f64, x: &Vec3) -> (f64, Vec3) {
        let rt = if self.time_step > 0.0 { key[0] as f64 * self.time_step } else { t };
        let mut rx = *x;
        if self.space_step > 0.0 {
            for a in 0..3 {
                rx[a] = key[a + 1] as f64 * self.space_step;
            }
        }
        (rt, rx)
    }
}

/// Thread-safe memo table keyed by quantized samples; the first computed
/// value for a key is kept.
pub struct SampleCache<V> {
    pub quantizer: Quantizer,
    map: Mutex<HashMap<SampleKey, Arc<V>>>,
}

impl<V> SampleCache<V> {
    pub fn new(quantizer: Quantizer) -> Self {
        SampleCache {
            quantizer,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().unwrap().clear();
    }

    /// Drops the entries whose key fails `keep`.
    pub fn retain(&self, keep: impl Fn(&SampleKey) -> bool) {
        self.map.lock().unwrap().retain(|k, _| keep(k));
    }

    /// Returns the cached value of the sample's key, computing it at the
    /// representative point when absent.
    pub fn get_or_compute<E>(
        &self,
        t: f64,
        x: &Vec3,
        compute: impl FnOnce(f64, &Vec3) -> Result<V, E>,
    ) -> Result<Arc<V>, E> {
        let key = self.quantizer.key(t, x);
        if let Some(v) = self.map.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let (rt, rx) = self.quantizer.representative(&key, t, x);
        let v = Arc::new(compute(rt, &rx)?);
        let mut map = self.map.lock().unwrap();
        Ok(map.entry(key).or_insert(v).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearby_samples_share_an_entry() {
        let c: SampleCache<f64> = SampleCache::new(Quantizer { time_step: 0.1, space_step: 0.0 });
        let a = c.get_or_compute::<()>(0.31, &Vec3::zeros(), |t, _| Ok(t)).unwrap();
        let b = c.get_or_compute::<()>(0.29, &Vec3::x(), |_, _| Ok(-1.0)).unwrap();
        assert_eq!(*a, *b);
        assert!((*a - 0.3).abs() < 1e-15);
        assert_eq!(c.len(), 1);
    }
}
