//! Per-session state: the rest mesh, its cached factorization, the γ_f target and edits.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use forge_core::blend::{error_curve, ErrorCurveReport};
use forge_core::solver::{Anchors, Caricaturizer};
use forge_core::{BlendPair, Mesh, DEFAULT_GAMMA_F};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub gamma_f: f64,
    /// ε for `|K|_ε`; relative default when absent.
    pub epsilon: Option<f64>,
    /// Poincaré constant used by the error-curve bound unless calibration is requested.
    pub c_p: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            gamma_f: DEFAULT_GAMMA_F,
            epsilon: None,
            c_p: 1.0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> ApiResult<()> {
        if !(self.gamma_f > 0.0 && self.gamma_f.is_finite()) {
            return Err(ApiError::bad_request(format!("gamma_f must be positive, got {}", self.gamma_f)));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ApiError::bad_request(format!("epsilon must be positive, got {e}")));
            }
        }
        if !(self.c_p > 0.0 && self.c_p.is_finite()) {
            return Err(ApiError::bad_request(format!("c_p must be positive, got {}", self.c_p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecomputeReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub gamma_f: f64,
    pub epsilon: f64,
    #[serde(rename = "K_inf")]
    pub k_inf: f64,
    pub anchored_vertices: usize,
    pub residual_norm: f64,
    pub constraint_violation: f64,
    pub precompute_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Edit {
    pub id: String,
    pub regions: Vec<String>,
    /// Sorted free vertices of the edit.
    pub region: Vec<usize>,
    pub gamma: f64,
    pub mesh: Mesh,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditSummary {
    pub id: String,
    pub regions: Vec<String>,
    pub region_vertices: usize,
    pub gamma: f64,
    pub residual_norm: f64,
}

impl Edit {
    pub fn summary(&self) -> EditSummary {
        EditSummary {
            id: self.id.clone(),
            regions: self.regions.clone(),
            region_vertices: self.region.len(),
            gamma: self.gamma,
            residual_norm: self.residual_norm,
        }
    }
}

type EditKey = (Vec<usize>, u64);

#[derive(Default)]
struct Edits {
    by_key: HashMap<EditKey, Arc<Edit>>,
    by_id: BTreeMap<String, Arc<Edit>>,
    engines: HashMap<Vec<usize>, Arc<Caricaturizer>>,
    curves: HashMap<(usize, bool), Arc<ErrorCurveReport>>,
}

pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub engine: Caricaturizer,
    pub pair: BlendPair,
    pub report: PrecomputeReport,
    edits: Mutex<Edits>,
    /// Serializes the linear solves of this session; blends never take it.
    solve_gate: tokio::sync::Mutex<()>,
}

/// Region of an edit request after resolution against the session labels.
#[derive(Debug, Clone)]
pub struct ResolvedRegion {
    pub names: Vec<String>,
    pub vertices: Vec<usize>,
}

impl Session {
    /// Builds operators, curvature and the factorization, then solves `S_{γ_f}`.
    pub fn precompute(id: String, mesh: Mesh, config: SessionConfig) -> ApiResult<Session> {
        config.validate()?;
        let start = Instant::now();
        let engine = Caricaturizer::new(mesh.clone(), config.epsilon)?;
        let target = engine.solve(config.gamma_f)?;
        let report = PrecomputeReport {
            vertex_count: mesh.vertex_count(),
            face_count: mesh.face_count(),
            gamma_f: config.gamma_f,
            epsilon: engine.curvature.epsilon,
            k_inf: engine.curvature.k_inf(),
            anchored_vertices: engine.anchors.constraints.len(),
            residual_norm: target.residual_norm,
            constraint_violation: target.constraint_violation,
            precompute_ms: 0.0,
        };
        let pair = BlendPair::new(mesh, target.mesh, config.gamma_f)?;
        let mut s = Session::assemble(id, config, engine, pair, report);
        s.report.precompute_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(s)
    }

    /// Rebuilds a session from a stored target without solving.
    pub fn restore(id: String, base: Mesh, target: Mesh, config: SessionConfig, report: PrecomputeReport) -> ApiResult<Session> {
        config.validate()?;
        let engine = Caricaturizer::new(base.clone(), config.epsilon)?;
        let pair = BlendPair::new(base, target, config.gamma_f)?;
        Ok(Session::assemble(id, config, engine, pair, report))
    }

    fn assemble(id: String, config: SessionConfig, engine: Caricaturizer, pair: BlendPair, report: PrecomputeReport) -> Session {
        Session {
            id,
            config,
            engine,
            pair,
            report,
            edits: Mutex::new(Edits::default()),
            solve_gate: tokio::sync::Mutex::new(()),
        }
    }

    pub fn base(&self) -> &Mesh {
        &self.pair.base
    }

    /// Linear solves performed by every factorization owned by this session.
    pub fn solve_count(&self) -> u64 {
        let edits = self.edits.lock().unwrap();
        self.engine.solver().solve_count() + edits.engines.values().map(|e| e.solver().solve_count()).sum::<u64>()
    }

    pub fn blend(&self, gamma: f64) -> ApiResult<Mesh> {
        if !gamma.is_finite() {
            return Err(ApiError::bad_request("gamma must be finite"));
        }
        Ok(self.pair.blend(gamma)?)
    }

    pub fn edit(&self, id: &str) -> Option<Arc<Edit>> {
        self.edits.lock().unwrap().by_id.get(id).cloned()
    }

    pub fn edit_summaries(&self) -> Vec<EditSummary> {
        self.edits.lock().unwrap().by_id.values().map(|e| e.summary()).collect()
    }

    pub fn resolve_region(&self, names: &[String], vertices: &[usize]) -> ApiResult<ResolvedRegion> {
        let base = self.base();
        let mut set: BTreeSet<usize> = base.labels.union(names)?;
        for &v in vertices {
            if v >= base.vertex_count() {
                return Err(forge_core::Error::OutOfRangeIndex {
                    index: v as i64,
                    len: base.vertex_count(),
                }
                .into());
            }
            set.insert(v);
        }
        if set.is_empty() {
            return Err(forge_core::Error::EmptyRegion.into());
        }
        Ok(ResolvedRegion {
            names: names.to_vec(),
            vertices: set.into_iter().collect(),
        })
    }

    pub fn validate_edit_gamma(&self, gamma: f64) -> ApiResult<()> {
        if !(0.0..=self.config.gamma_f).contains(&gamma) {
            return Err(ApiError::bad_request(format!(
                "gamma {gamma} outside [0, {}]",
                self.config.gamma_f
            )));
        }
        Ok(())
    }

    fn cached_edit(&self, key: &EditKey) -> Option<Arc<Edit>> {
        self.edits.lock().unwrap().by_key.get(key).cloned()
    }

    /// Localized exaggeration; identical requests return the cached edit.
    pub async fn local_edit(self: &Arc<Self>, region: ResolvedRegion, gamma: f64) -> ApiResult<(Arc<Edit>, bool)> {
        self.validate_edit_gamma(gamma)?;
        let key = (region.vertices.clone(), gamma.to_bits());
        if let Some(e) = self.cached_edit(&key) {
            return Ok((e, false));
        }
        let _gate = self.solve_gate.lock().await;
        if let Some(e) = self.cached_edit(&key) {
            return Ok((e, false));
        }
        let engine = self.edits.lock().unwrap().engines.get(&region.vertices).cloned();
        let session = Arc::clone(self);
        let verts = region.vertices.clone();
        let (engine, sol) = tokio::task::spawn_blocking(move || -> ApiResult<_> {
            let engine = match engine {
                Some(e) => e,
                None => {
                    let set: BTreeSet<usize> = verts.iter().copied().collect();
                    let anchors = Anchors::outside_region(session.base(), &set)?;
                    Arc::new(session.engine.with_anchors(anchors)?)
                }
            };
            let sol = engine.solve(gamma)?;
            Ok((engine, sol))
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
        let mut edits = self.edits.lock().unwrap();
        edits.engines.entry(region.vertices.clone()).or_insert(engine);
        let edit = Arc::new(Edit {
            id: format!("edit-{}", edits.by_id.len() + 1),
            regions: region.names,
            region: region.vertices,
            gamma,
            mesh: sol.mesh,
            residual_norm: sol.residual_norm,
        });
        edits.by_key.insert(key, Arc::clone(&edit));
        edits.by_id.insert(edit.id.clone(), Arc::clone(&edit));
        Ok((edit, true))
    }

    /// Inserts a stored edit (snapshot restore).
    pub fn insert_edit(&self, edit: Edit) {
        let mut edits = self.edits.lock().unwrap();
        let edit = Arc::new(edit);
        edits.by_key.insert((edit.region.clone(), edit.gamma.to_bits()), Arc::clone(&edit));
        edits.by_id.insert(edit.id.clone(), edit);
    }

    /// Exact-solve error curve over `samples` evenly spaced γ; cached per request.
    pub async fn error_curve(self: &Arc<Self>, samples: usize, calibrate: bool) -> ApiResult<Arc<ErrorCurveReport>> {
        if samples < 3 {
            return Err(ApiError::bad_request("samples must be >= 3"));
        }
        if samples > 1001 {
            return Err(ApiError::bad_request("samples must be <= 1001"));
        }
        let key = (samples, calibrate);
        if let Some(r) = self.edits.lock().unwrap().curves.get(&key).cloned() {
            return Ok(r);
        }
        let _gate = self.solve_gate.lock().await;
        if let Some(r) = self.edits.lock().unwrap().curves.get(&key).cloned() {
            return Ok(r);
        }
        let session = Arc::clone(self);
        let report = tokio::task::spawn_blocking(move || {
            error_curve(&session.engine, session.config.gamma_f, samples, session.config.c_p, calibrate)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
        let report = Arc::new(report);
        self.edits.lock().unwrap().curves.insert(key, Arc::clone(&report));
        Ok(report)
    }
}
