use axum::extract::{FromRequest, FromRequestParts, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use qualnet_core::ingest::{ingest_corpus, project_abbreviations};
use qualnet_core::metrics::{evaluate_project, GoldFile, ProjectEvalReport};
use qualnet_core::model::{ConceptPatch, IndicatorPatch};
use qualnet_core::network::{
    build_indicator_graph, component_of, consolidate, degree_filter, export_graphs, semantic_search, GraphEdge,
    GraphNode, IndicatorGraph, Selection, WireConceptEdge, WireConceptNode,
};
use qualnet_core::pipeline::Stage;
use qualnet_core::store::{indicators_csv, to_canonical_string, ProjectFile};
use qualnet_core::{
    Concept, ConceptId, EdgeId, Indicator, IndicatorId, MatchPolicy, Project, SearchHit, Sentence, UnitId,
};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::AppState;

/// `Json` with rejections reported as [`ApiError`].
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct ApiQuery<T>(pub T);

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{id}", get(get_project).delete(delete_project))
        .route("/projects/{id}/overview", put(put_overview))
        .route("/projects/{id}/corpus", post(post_corpus))
        .route("/projects/{id}/run", post(post_run))
        .route("/jobs/{job}", get(get_job))
        .route("/projects/{id}/indicators", get(list_indicators))
        .route(
            "/projects/{id}/indicators/{iid}",
            get(get_indicator).patch(patch_indicator).delete(delete_indicator),
        )
        .route("/projects/{id}/concepts", get(list_concepts).post(post_concept))
        .route(
            "/projects/{id}/concepts/{cid}",
            patch(patch_concept).delete(delete_concept),
        )
        .route("/projects/{id}/network", get(get_network))
        .route("/projects/{id}/network/component", get(get_component))
        .route("/projects/{id}/search", get(get_search))
        .route("/projects/{id}/evaluate", post(post_evaluate))
        .route("/projects/{id}/export", get(get_export))
        .route("/projects/{id}/rebuild", post(post_rebuild))
        .with_state(state)
}

/// A JSON body plus the revision the client last saw.
#[derive(Deserialize)]
pub struct Versioned<T> {
    #[serde(flatten)]
    pub body: T,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Deserialize)]
pub struct RevisionQuery {
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Serialize)]
pub struct Revision<T: Serialize> {
    pub revision: u64,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Serialize)]
struct Empty {}

fn revised<T: Serialize>((revision, body): (u64, T)) -> Json<Revision<T>> {
    Json(Revision { revision, body })
}

// ---- projects ----

#[derive(Serialize)]
struct ProjectSummary {
    project_id: String,
    revision: u64,
    units: usize,
    indicators: usize,
    concepts: usize,
}

async fn list_projects(State(state): State<AppState>) -> Json<Vec<ProjectSummary>> {
    Json(
        state
            .list()
            .iter()
            .map(|p| ProjectSummary {
                project_id: p.project_id.clone(),
                revision: p.revision,
                units: p.units.len(),
                indicators: p.live_indicators().count(),
                concepts: p.concepts.len(),
            })
            .collect(),
    )
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    #[serde(default)]
    project_id: Option<String>,
    #[serde(default)]
    overview: Option<String>,
    #[serde(default)]
    abbreviations: Option<Vec<String>>,
}

async fn create_project(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateProject>,
) -> ApiResult<(StatusCode, Json<Project>)> {
    let id = req.project_id.unwrap_or_else(|| state.fresh_id());
    let mut project = Project::new(id);
    if let Some(text) = req.overview {
        project.set_overview(text)?;
    }
    project.abbreviations = req.abbreviations;
    let created = state.create(project)?;
    Ok((StatusCode::CREATED, Json((*created).clone())))
}

async fn get_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Project>> {
    Ok(Json((*state.snapshot(&id)?).clone()))
}

async fn delete_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    state.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct Overview {
    text: String,
}

async fn put_overview(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<Versioned<Overview>>,
) -> ApiResult<Json<Revision<Empty>>> {
    let out = state
        .mutate(&id, req.expected_revision, |p| {
            p.set_overview(req.body.text)?;
            Ok(Empty {})
        })
        .await?;
    Ok(revised(out))
}

#[derive(Serialize)]
struct CorpusAdded {
    units: Vec<UnitId>,
    sentences: usize,
}

/// The body is the corpus text itself, one unit per non-blank line.
async fn post_corpus(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<RevisionQuery>,
    body: String,
) -> ApiResult<Json<Revision<CorpusAdded>>> {
    let out = state
        .mutate(&id, q.expected_revision, |p| {
            let before = p.sentences.len();
            let abbreviations = project_abbreviations(p);
            let units = ingest_corpus(p, &body, &abbreviations).map_err(|e| ApiError::invalid(e.to_string()))?;
            Ok(CorpusAdded {
                units,
                sentences: p.sentences.len() - before,
            })
        })
        .await?;
    Ok(revised(out))
}

// ---- pipeline jobs ----

#[derive(Deserialize)]
struct RunQuery {
    #[serde(default)]
    stages: Option<String>,
    #[serde(default)]
    expected_revision: Option<u64>,
}

async fn post_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<RunQuery>,
) -> ApiResult<(StatusCode, Json<crate::state::Job>)> {
    let stages = match q.stages.as_deref() {
        None | Some("") => Stage::ALL.to_vec(),
        Some(s) => Stage::parse_list(s).map_err(ApiError::invalid)?,
    };
    let job = state.start_run(&id, stages, q.expected_revision)?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn get_job(State(state): State<AppState>, Path(job): Path<String>) -> ApiResult<Json<crate::state::Job>> {
    Ok(Json(state.job(&job)?))
}

// ---- indicators ----

#[derive(Serialize)]
struct IndicatorList {
    indicators: Vec<Indicator>,
}

async fn list_indicators(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Revision<IndicatorList>>> {
    let p = state.snapshot(&id)?;
    Ok(revised((
        p.revision,
        IndicatorList {
            indicators: p.indicators.clone(),
        },
    )))
}

#[derive(Serialize)]
struct IndicatorDetail {
    indicator: Indicator,
    sentence: Sentence,
    concept: Option<Concept>,
}

fn indicator_detail(p: &Project, iid: IndicatorId) -> ApiResult<IndicatorDetail> {
    let indicator = p
        .indicator(iid)
        .ok_or_else(|| ApiError::not_found(format!("no indicator {iid}")))?
        .clone();
    let sentence = p
        .sentence(indicator.sentence_id)
        .ok_or_else(|| ApiError::internal(format!("indicator {iid} has no sentence")))?
        .clone();
    let concept = indicator.concept_id.and_then(|c| p.concept(c)).cloned();
    Ok(IndicatorDetail {
        indicator,
        sentence,
        concept,
    })
}

async fn get_indicator(
    State(state): State<AppState>,
    Path((id, iid)): Path<(String, u64)>,
) -> ApiResult<Json<Revision<IndicatorDetail>>> {
    let p = state.snapshot(&id)?;
    Ok(revised((p.revision, indicator_detail(&p, IndicatorId(iid))?)))
}

async fn patch_indicator(
    State(state): State<AppState>,
    Path((id, iid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<Versioned<IndicatorPatch>>,
) -> ApiResult<Json<Revision<IndicatorDetail>>> {
    let iid = IndicatorId(iid);
    let out = state
        .mutate(&id, req.expected_revision, |p| {
            p.edit_indicator(iid, &req.body)?;
            indicator_detail(p, iid)
        })
        .await?;
    Ok(revised(out))
}

async fn delete_indicator(
    State(state): State<AppState>,
    Path((id, iid)): Path<(String, u64)>,
    ApiQuery(q): ApiQuery<RevisionQuery>,
) -> ApiResult<Json<Revision<Empty>>> {
    let out = state
        .mutate(&id, q.expected_revision, |p| {
            p.delete_indicator(IndicatorId(iid))?;
            Ok(Empty {})
        })
        .await?;
    Ok(revised(out))
}

// ---- concepts ----

#[derive(Serialize)]
struct ConceptList {
    concepts: Vec<Concept>,
}

async fn list_concepts(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Revision<ConceptList>>> {
    let p = state.snapshot(&id)?;
    Ok(revised((
        p.revision,
        ConceptList {
            concepts: p.concepts.clone(),
        },
    )))
}

pub const DEFAULT_CONCEPT_COLOR: &str = "#808080";

#[derive(Deserialize)]
struct NewConcept {
    name: String,
    #[serde(default)]
    definition: String,
    #[serde(default)]
    color: Option<String>,
    #[serde(default)]
    references: Vec<String>,
}

#[derive(Serialize)]
struct ConceptBody {
    concept: Concept,
}

async fn post_concept(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<Versioned<NewConcept>>,
) -> ApiResult<(StatusCode, Json<Revision<ConceptBody>>)> {
    let c = req.body;
    let out = state
        .mutate(&id, req.expected_revision, |p| {
            let color = c.color.as_deref().unwrap_or(DEFAULT_CONCEPT_COLOR);
            let cid = p.add_concept(&c.name, &c.definition, color, c.references)?;
            Ok(ConceptBody {
                concept: p.concept(cid).expect("just added").clone(),
            })
        })
        .await?;
    Ok((StatusCode::CREATED, revised(out)))
}

async fn patch_concept(
    State(state): State<AppState>,
    Path((id, cid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<Versioned<ConceptPatch>>,
) -> ApiResult<Json<Revision<ConceptBody>>> {
    let cid = ConceptId(cid);
    let out = state
        .mutate(&id, req.expected_revision, |p| {
            p.update_concept(cid, &req.body)?;
            Ok(ConceptBody {
                concept: p.concept(cid).expect("updated").clone(),
            })
        })
        .await?;
    Ok(revised(out))
}

async fn delete_concept(
    State(state): State<AppState>,
    Path((id, cid)): Path<(String, u64)>,
    ApiQuery(q): ApiQuery<RevisionQuery>,
) -> ApiResult<Json<Revision<Empty>>> {
    let out = state
        .mutate(&id, q.expected_revision, |p| {
            p.remove_concept(ConceptId(cid))?;
            Ok(Empty {})
        })
        .await?;
    Ok(revised(out))
}

async fn post_rebuild(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<RevisionQuery>,
) -> ApiResult<Json<Revision<Empty>>> {
    let out = state
        .mutate(&id, q.expected_revision, |p| {
            qualnet_core::network::rebuild_concept_edges(p);
            Ok(Empty {})
        })
        .await?;
    Ok(revised(out))
}

// ---- views ----

#[derive(Deserialize)]
struct NetworkQuery {
    #[serde(default)]
    view: Option<String>,
    #[serde(default)]
    fraction: Option<f64>,
}

/// A network view. `view=indicator` carries only the (filtered) indicator
/// graph, `view=concept` only the concept graph; without `view` both.
#[derive(Serialize)]
struct NetworkView {
    project_id: String,
    revision: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<GraphNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<GraphEdge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    concept_nodes: Option<Vec<WireConceptNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    concept_edges: Option<Vec<WireConceptEdge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_indicator_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    excluded_edges: Option<usize>,
}

async fn get_network(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<NetworkQuery>,
) -> ApiResult<Json<NetworkView>> {
    let p = state.snapshot(&id)?;
    let (indicators, concepts) = match q.view.as_deref() {
        None => (true, true),
        Some("indicator") => (true, false),
        Some("concept") => (false, true),
        Some(other) => return Err(ApiError::invalid(format!("unknown view {other:?}"))),
    };
    let graph = build_indicator_graph(&p);
    let concept_graph = consolidate(&graph, &p.concepts);
    let shown = match q.fraction {
        Some(f) => degree_filter(&graph, f)?,
        None => graph,
    };
    let export = export_graphs(&p, &shown, &concept_graph);
    Ok(Json(NetworkView {
        project_id: export.project_id,
        revision: export.revision,
        fraction: q.fraction.filter(|_| indicators),
        nodes: indicators.then_some(export.nodes),
        edges: indicators.then_some(export.edges),
        concept_nodes: concepts.then_some(export.concept_nodes),
        concept_edges: concepts.then_some(export.concept_edges),
        total_indicator_edges: concepts.then_some(export.total_indicator_edges),
        excluded_edges: concepts.then_some(export.excluded_edges),
    }))
}

#[derive(Deserialize)]
struct ComponentQuery {
    #[serde(default)]
    node: Option<u64>,
    #[serde(default)]
    edge: Option<u64>,
}

#[derive(Serialize)]
struct Component {
    #[serde(flatten)]
    graph: IndicatorGraph,
}

async fn get_component(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<ComponentQuery>,
) -> ApiResult<Json<Revision<Component>>> {
    let selection = match (q.node, q.edge) {
        (Some(n), None) => Selection::Node(IndicatorId(n)),
        (None, Some(e)) => Selection::Edge(EdgeId(e)),
        _ => return Err(ApiError::invalid("give exactly one of node= or edge=")),
    };
    let p = state.snapshot(&id)?;
    let graph = component_of(&build_indicator_graph(&p), selection)?;
    Ok(revised((p.revision, Component { graph })))
}

#[derive(Deserialize)]
struct SearchQuery {
    q: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    10
}

#[derive(Serialize)]
struct SearchResult {
    hits: Vec<SearchHit>,
}

async fn get_search(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<SearchQuery>,
) -> ApiResult<Json<Revision<SearchResult>>> {
    if q.q.trim().is_empty() {
        return Err(ApiError::invalid("empty query"));
    }
    let slot = state.slot(&id)?;
    let backend = state.backend();
    tokio::task::spawn_blocking(move || {
        let p = slot.snapshot();
        let graph = build_indicator_graph(&p);
        let mut cache = slot.search.lock().expect("search cache lock");
        let live = graph.nodes.iter().map(|n| n.text.as_str()).collect();
        cache.retain_texts(&live);
        let hits = semantic_search(&q.q, &graph, &*backend, &mut cache, q.k)?;
        Ok(revised((p.revision, SearchResult { hits })))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

/// A gold file, optionally with a match policy (exact by default).
#[derive(Deserialize)]
#[serde(untagged)]
enum EvaluateRequest {
    WithPolicy { gold: GoldFile, policy: Option<MatchPolicy> },
    Bare(GoldFile),
}

async fn post_evaluate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<EvaluateRequest>,
) -> ApiResult<Json<Revision<ProjectEvalReport<f64>>>> {
    let (gold, policy) = match req {
        EvaluateRequest::WithPolicy { gold, policy } => (gold, policy.unwrap_or_default()),
        EvaluateRequest::Bare(gold) => (gold, MatchPolicy::default()),
    };
    let p = state.snapshot(&id)?;
    let backend = state.backend();
    tokio::task::spawn_blocking(move || {
        let report = evaluate_project(&p, &gold, &policy, Some(&*backend))?;
        Ok(revised((p.revision, report)))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    format: Option<String>,
}

/// `json`: the network wire format; `csv`: the indicator table;
/// `project`: the canonical project file.
async fn get_export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<ExportQuery>,
) -> ApiResult<Response> {
    let p = state.snapshot(&id)?;
    let json = |s: String| ([(header::CONTENT_TYPE, "application/json")], s).into_response();
    match q.format.as_deref().unwrap_or("json") {
        "json" => {
            let text = qualnet_core::store::canonical_json(&qualnet_core::network::export_network(&p))
                .map_err(|e| ApiError::internal(e.to_string()))?;
            Ok(json(text))
        }
        "project" => Ok(json(to_canonical_string(&ProjectFile::new((*p).clone()))?)),
        "csv" => Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], indicators_csv(&p)?).into_response()),
        other => Err(ApiError::invalid(format!("unknown format {other:?} (json, csv or project)"))),
    }
}
