use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use radiogram::catalog::{canonical_key, EquivalenceLevel};
use radiogram::grammar::{
    applicable_moves, apply_move, candidate_moves, initial_design, replay, ApplyMode, Design,
    GrammarId, Move,
};
use radiogram::polyhedra::ShapeKind;
use radiogram_cli::service::{router, AppState};

fn app() -> Router {
    router(Arc::new(AppState::new(None, 2)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    raw(app, req).await
}

async fn raw(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).expect("JSON body")
    };
    (status, value)
}

async fn create(app: &Router, grammar: &str, kind: &str) -> String {
    let (status, v) = call(
        app,
        "POST",
        "/sessions",
        Some(json!({"grammar": grammar, "initial_kind": kind})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn apply(app: &Router, id: &str, m: &Move) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/sessions/{id}/apply"),
        Some(json!({"move": m})),
    )
    .await
}

fn l1_hex(d: &Design) -> String {
    canonical_key(d, EquivalenceLevel::L1Geometry).digest_hex()
}

fn moves_of(v: &Value) -> Vec<Move> {
    v["moves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| serde_json::from_value(c["move"].clone()).unwrap())
        .collect()
}

#[tokio::test]
async fn fresh_tet_session_offers_24_moves() {
    let app = app();
    let id = create(&app, "TET_TET", "TET").await;
    let (status, v) = call(&app, "GET", &format!("/sessions/{id}/moves"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["count"], 24);
    let d = initial_design(GrammarId::TetTet, ShapeKind::Tet, false).unwrap();
    assert_eq!(moves_of(&v), applicable_moves(&d));
    assert!(v["moves"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["feasible"] == true));
}

#[tokio::test]
async fn apply_then_undo_restores_l1_key() {
    let app = app();
    let id = create(&app, "tet-oct", "oct").await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}/design"), None).await;
    let d0 = initial_design(GrammarId::TetOct, ShapeKind::Oct, false).unwrap();
    assert_eq!(before["l1_key"], l1_hex(&d0));

    let m = applicable_moves(&d0)[13];
    let (status, after) = apply(&app, &id, &m).await;
    assert_eq!(status, StatusCode::OK, "{after}");
    let d1 = apply_move(&d0, &m, ApplyMode::Strict).unwrap();
    assert_eq!(after["l1_key"], l1_hex(&d1));
    assert_eq!(after["design"], serde_json::to_value(&d1).unwrap());

    let (status, undone) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(undone["l1_key"], before["l1_key"]);
    assert_eq!(undone["design"], before["design"]);

    let (status, redone) = call(&app, "POST", &format!("/sessions/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(redone["design"], after["design"]);

    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "NothingToRedo");
    call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "NothingToUndo");
}

#[tokio::test]
async fn applying_onto_a_used_face_conflicts() {
    let app = app();
    let id = create(&app, "TET_TET", "TET").await;
    let d = initial_design(GrammarId::TetTet, ShapeKind::Tet, false).unwrap();
    let m = applicable_moves(&d)[0];
    assert_eq!(apply(&app, &id, &m).await.0, StatusCode::OK);
    let (status, v) = apply(&app, &id, &Move { alignment: 2, ..m }).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "FaceOccupied");
    assert!(v["message"].as_str().unwrap().contains("already used"));

    // the rejected move left the session untouched
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}/design"), None).await;
    assert_eq!(v["design"]["trace"].as_array().unwrap().len(), 1);

    let oob = Move { host_shape: 9, ..m };
    let (status, v) = apply(&app, &id, &oob).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "MoveNotApplicable");
    let wrong_kind = Move {
        kind: ShapeKind::Oct,
        host_face: 1,
        ..m
    };
    assert_eq!(
        apply(&app, &id, &wrong_kind).await.1["error"],
        "MoveNotApplicable"
    );
}

/// First strict design (breadth first over the moves in order) that has an
/// overlapping candidate move.
fn design_with_overlap() -> (Design, Move) {
    let mut frontier = vec![initial_design(GrammarId::TetTet, ShapeKind::Tet, false).unwrap()];
    loop {
        let mut next = Vec::new();
        for d in &frontier {
            for c in candidate_moves(d) {
                if !c.feasible {
                    return (d.clone(), c.mv);
                }
                if next.len() < 64 {
                    next.push(apply_move(d, &c.mv, ApplyMode::Strict).unwrap());
                }
            }
        }
        frontier = next;
    }
}

#[tokio::test]
async fn overlapping_move_conflicts() {
    let app = app();
    let (d, bad) = design_with_overlap();
    let id = create(&app, "TET_TET", "TET").await;
    for m in &d.trace {
        assert_eq!(apply(&app, &id, m).await.0, StatusCode::OK);
    }
    let (_, moves) = call(&app, "GET", &format!("/sessions/{id}/moves"), None).await;
    let flagged = moves["moves"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["move"] == serde_json::to_value(bad).unwrap())
        .unwrap();
    assert_eq!(flagged["feasible"], false);
    let (status, v) = apply(&app, &id, &bad).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "OverlapCreated");
}

#[tokio::test]
async fn malformed_requests_are_rejected() {
    let app = app();
    let id = create(&app, "TET_TET", "TET").await;
    let uri = format!("/sessions/{id}/apply");
    let req = Request::builder()
        .method("POST")
        .uri(&uri)
        .body(Body::from("{not json"))
        .unwrap();
    let (status, v) = raw(&app, req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "MalformedMove");

    let bad_label = json!({"move": {"host_shape": 0, "host_face": 0, "kind": "TET", "alignment": 7, "orientation": 1}});
    let (status, v) = call(&app, "POST", &uri, Some(bad_label)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["message"].as_str().unwrap().contains("alignment"));

    let missing = json!({"host_shape": 0, "kind": "TET"});
    assert_eq!(
        call(&app, "POST", &uri, Some(missing)).await.0,
        StatusCode::BAD_REQUEST
    );

    // bare move objects are accepted too
    let bare =
        json!({"host_shape": 0, "host_face": 3, "kind": "TET", "alignment": 1, "orientation": -1});
    assert_eq!(call(&app, "POST", &uri, Some(bare)).await.0, StatusCode::OK);

    let (status, v) = call(&app, "GET", "/sessions/nope/design", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "UnknownSession");
    assert_eq!(
        call(&app, "POST", "/sessions/nope/undo", None).await.0,
        StatusCode::NOT_FOUND
    );

    let (status, v) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"grammar": "OCT_OCT", "initial_kind": "TET"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "KindNotInGrammar");
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({"grammar": "CUBE"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app();
    let a = create(&app, "TET_TET", "TET").await;
    let b = create(&app, "TET_TET", "TET").await;
    assert_ne!(a, b);
    let (_, before) = call(&app, "GET", &format!("/sessions/{b}/design"), None).await;
    let d = initial_design(GrammarId::TetTet, ShapeKind::Tet, false).unwrap();
    for m in applicable_moves(&d).iter().step_by(6).take(3) {
        assert_eq!(apply(&app, &a, m).await.0, StatusCode::OK);
    }
    let (_, after) = call(&app, "GET", &format!("/sessions/{b}/design"), None).await;
    assert_eq!(before, after);
    assert_eq!(
        call(&app, "POST", &format!("/sessions/{b}/undo"), None)
            .await
            .0,
        StatusCode::CONFLICT
    );
    let (_, a_now) = call(&app, "GET", &format!("/sessions/{a}/design"), None).await;
    assert_eq!(a_now["design"]["shapes"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn concurrent_mutations_serialize_per_session() {
    let app = app();
    let id = create(&app, "OCT_OCT", "OCT").await;
    let d = initial_design(GrammarId::OctOct, ShapeKind::Oct, false).unwrap();
    // two labels per face: exactly one per face can win
    let moves: Vec<Move> = applicable_moves(&d)
        .into_iter()
        .filter(|m| m.alignment == 0)
        .collect();
    let tasks: Vec<_> = moves
        .iter()
        .map(|m| {
            let (app, id, m) = (app.clone(), id.clone(), *m);
            tokio::spawn(async move { apply(&app, &id, &m).await.0 })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            s => assert_eq!(s, StatusCode::CONFLICT),
        }
    }
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}/design"), None).await;
    let trace: Vec<Move> = serde_json::from_value(v["design"]["trace"].clone()).unwrap();
    assert_eq!(trace.len(), ok);
    let mut faces: Vec<usize> = trace.iter().map(|m| m.host_face).collect();
    faces.sort();
    faces.dedup();
    assert_eq!(faces.len(), trace.len());
    let rebuilt = replay(
        GrammarId::OctOct,
        ShapeKind::Oct,
        false,
        &trace,
        ApplyMode::Strict,
    )
    .unwrap();
    assert_eq!(v["design"], serde_json::to_value(&rebuilt).unwrap());
}

fn assert_mesh_matches(view: &Value, d: &Design) {
    let verts = view["mesh"]["vertices"].as_array().unwrap();
    let exact: Vec<[f64; 3]> = d.all_vertices().map(|p| p.to_f64()).collect();
    assert_eq!(verts.len(), exact.len());
    for (v, e) in verts.iter().zip(&exact) {
        for k in 0..3 {
            let got = v[k].as_f64().unwrap();
            assert!(
                (got - e[k]).abs() <= 1e-8 * e[k].abs().max(1.0),
                "{got} vs {}",
                e[k]
            );
        }
    }
    let faces = view["mesh"]["faces"].as_array().unwrap();
    let expected: usize = d.shapes.iter().map(|s| s.face_labels.len()).sum();
    assert_eq!(faces.len(), expected);
    for f in faces {
        let (s, i) = (
            f["shape"].as_u64().unwrap() as usize,
            f["face"].as_u64().unwrap() as usize,
        );
        assert_eq!(f["face_id"], format!("{s}.{i}"));
        assert_eq!(
            f["label"],
            serde_json::to_value(d.shapes[s].face_labels[i]).unwrap()
        );
    }
}

/// create, three applies, undo, twin, frame: the flow an explorer client runs.
#[tokio::test]
async fn scripted_explorer_session() {
    let app = app();
    let id = create(&app, "TET_OCT", "TET").await;
    let helix = [
        Move::new(0, 0, ShapeKind::Tet, 0, 1).unwrap(),
        Move::new(0, 1, ShapeKind::Tet, 0, 1).unwrap(),
        Move::new(1, 1, ShapeKind::Tet, 0, 1).unwrap(),
    ];
    let mut local = initial_design(GrammarId::TetOct, ShapeKind::Tet, false).unwrap();
    let mut keys = vec![l1_hex(&local)];
    for m in &helix {
        let (_, moves) = call(&app, "GET", &format!("/sessions/{id}/moves"), None).await;
        assert_eq!(moves_of(&moves), applicable_moves(&local));
        let (status, view) = apply(&app, &id, m).await;
        assert_eq!(status, StatusCode::OK, "{view}");
        local = apply_move(&local, m, ApplyMode::Strict).unwrap();
        assert_mesh_matches(&view, &local);
        keys.push(l1_hex(&local));
    }

    let (_, view) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(view["l1_key"], keys[2]);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::OK);

    let (status, twin) = call(&app, "GET", &format!("/sessions/{id}/twin"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(twin["is_chiral"], true);
    assert_ne!(twin["twin"]["l1_key"], keys[3]);
    let twin_trace: Vec<Move> =
        serde_json::from_value(twin["twin"]["design"]["trace"].clone()).unwrap();
    let twin_d = replay(
        GrammarId::TetOct,
        ShapeKind::Tet,
        false,
        &twin_trace,
        ApplyMode::Strict,
    )
    .unwrap();
    assert_eq!(
        twin["twin"]["design"],
        serde_json::to_value(&twin_d).unwrap()
    );
    assert_mesh_matches(&twin["twin"], &twin_d);

    let (status, frame) = call(&app, "GET", &format!("/sessions/{id}/frame"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(frame["nodes"].as_array().unwrap().len(), 7);
    assert_eq!(frame["struts"].as_array().unwrap().len(), 15);
    assert_eq!(frame["stats"]["connected"], true);
    assert_eq!(frame["stats"]["chiral"], true);
    // tetrahedra glued to each other leave the octet lattice
    assert_eq!(frame["fcc_residency"], false);
}

#[tokio::test]
async fn octet_growth_stays_on_the_lattice() {
    let app = app();
    let (status, v) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"grammar": "TET_OCT", "initial_kind": "TET", "alternate": true})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = v["session_id"].as_str().unwrap().to_string();
    for m in [
        Move::new(0, 0, ShapeKind::Oct, 0, 1).unwrap(),
        Move::new(1, 5, ShapeKind::Tet, 2, -1).unwrap(),
        Move::new(2, 2, ShapeKind::Oct, 1, 1).unwrap(),
    ] {
        let (status, view) = apply(&app, &id, &m).await;
        assert_eq!(status, StatusCode::OK, "{view}");
        assert_eq!(view["fcc_residency"], true);
    }
    let (_, frame) = call(&app, "GET", &format!("/sessions/{id}/frame"), None).await;
    assert_eq!(frame["fcc_residency"], true);

    // an octahedral root sits on the lattice in its own embedding
    let (_, v) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"grammar": "TET_OCT", "initial_kind": "OCT", "alternate": true})),
    )
    .await;
    let id = v["session_id"].as_str().unwrap().to_string();
    let (_, view) = call(&app, "GET", &format!("/sessions/{id}/design"), None).await;
    assert_eq!(view["fcc_residency"], true);
    let (status, view) = apply(&app, &id, &Move::new(0, 3, ShapeKind::Tet, 1, -1).unwrap()).await;
    assert_eq!(status, StatusCode::OK, "{view}");
    assert_eq!(view["fcc_residency"], true);
}

#[tokio::test]
async fn catalog_pages_are_stable() {
    let app = app();
    let (status, all) = call(&app, "GET", "/catalog?grammar=tet&depth=1&level=l1", None).await;
    assert_eq!(status, StatusCode::OK, "{all}");
    assert_eq!(all["total"], 4);
    let items = all["items"].as_array().unwrap().clone();
    assert_eq!(items.len(), 4);

    let (_, page) = call(
        &app,
        "GET",
        "/catalog?grammar=tet&depth=1&level=l1&offset=1&limit=2",
        None,
    )
    .await;
    assert_eq!(page["items"].as_array().unwrap(), &items[1..3]);

    let (_, l3) = call(
        &app,
        "GET",
        "/catalog?grammar=TET_OCT&alternate=true&depth=2&level=l3",
        None,
    )
    .await;
    assert_eq!(l3["total"], 4);

    let (status, v) = call(&app, "GET", "/catalog?grammar=tet&depth=5", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "DepthTooLarge");
    let (status, v) = call(&app, "GET", "/catalog?grammar=tet&depth=1&level=l9", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "UnknownLevel");
    assert_eq!(
        call(&app, "GET", "/catalog?depth=1", None).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn sessions_survive_a_restart_when_persisted() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(Arc::new(AppState::new(Some(dir.path().to_path_buf()), 2)));
    let id = create(&first, "OCT_OCT", "OCT").await;
    let d = initial_design(GrammarId::OctOct, ShapeKind::Oct, false).unwrap();
    let moves = applicable_moves(&d);
    apply(&first, &id, &moves[0]).await;
    apply(&first, &id, &moves[12]).await;
    call(&first, "POST", &format!("/sessions/{id}/undo"), None).await;
    let (_, before) = call(&first, "GET", &format!("/sessions/{id}/design"), None).await;

    let state = Arc::new(AppState::new(Some(dir.path().to_path_buf()), 2));
    assert_eq!(state.load_snapshots().unwrap(), 1);
    let second = router(state);
    let (status, after) = call(&second, "GET", &format!("/sessions/{id}/design"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
    let (status, redone) = call(&second, "POST", &format!("/sessions/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(redone["design"]["trace"].as_array().unwrap().len(), 2);
}
