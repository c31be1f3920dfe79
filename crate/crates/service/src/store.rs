use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use caliper_core::dataset::{EvaluationSession, FeatureTable, ModelRecord};
use caliper_core::selection::SubgroupPredicate;

use crate::error::ApiError;

/// Cached bodies per session before the cache is dropped wholesale.
pub const CACHE_CAPACITY: usize = 512;

/// One session plus the state hung off it. The session itself is replaced,
/// never mutated, so readers holding an older `Arc` keep a consistent view.
#[derive(Debug)]
pub struct SessionEntry {
    session: RwLock<Arc<EvaluationSession>>,
    subgroups: RwLock<BTreeMap<String, SubgroupPredicate>>,
    cache: Mutex<HashMap<String, Arc<str>>>,
}

impl SessionEntry {
    fn new(session: EvaluationSession) -> Self {
        Self {
            session: RwLock::new(Arc::new(session)),
            subgroups: RwLock::new(BTreeMap::new()),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn snapshot(&self) -> Arc<EvaluationSession> {
        self.session.read().unwrap().clone()
    }

    pub fn add_model(&self, model: ModelRecord) -> Result<(), ApiError> {
        let mut slot = self.session.write().unwrap();
        let mut next = EvaluationSession::clone(&slot);
        next.add_model(model)?;
        *slot = Arc::new(next);
        Ok(())
    }

    /// Stores `predicate` under its label. Labels are write-once so cached
    /// responses that name a subgroup never go stale.
    pub fn add_subgroup(&self, predicate: SubgroupPredicate) -> Result<(), ApiError> {
        predicate.validate(self.snapshot().features())?;
        let mut groups = self.subgroups.write().unwrap();
        if groups.contains_key(&predicate.label) {
            return Err(ApiError::bad_request(
                "duplicate_subgroup",
                format!("subgroup {:?} already exists", predicate.label),
            ));
        }
        groups.insert(predicate.label.clone(), predicate);
        Ok(())
    }

    pub fn subgroup(&self, name: &str) -> Result<SubgroupPredicate, ApiError> {
        self.subgroups
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_subgroup", format!("no subgroup named {name:?}")))
    }

    pub fn subgroups(&self) -> Vec<SubgroupPredicate> {
        self.subgroups.read().unwrap().values().cloned().collect()
    }

    pub fn cached(&self, key: &str) -> Option<Arc<str>> {
        self.cache.lock().unwrap().get(key).cloned()
    }

    pub fn cache(&self, key: String, body: Arc<str>) {
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        cache.insert(key, body);
    }
}

/// All live sessions. Ids are assigned sequentially (`s1`, `s2`, ...), so a
/// fresh store hands out the same ids for the same request sequence.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
    next_id: AtomicU64,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, features: FeatureTable) -> String {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst) + 1);
        let entry = Arc::new(SessionEntry::new(EvaluationSession::new(id.clone(), features)));
        self.sessions.write().unwrap().insert(id.clone(), entry);
        id
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionEntry>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown_session", format!("no session {id:?}")))
    }
}
