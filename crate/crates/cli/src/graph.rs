use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use clap::{Args, ValueEnum};
use qshearer_core::hypergraph::{parse_hypergraph, HypergraphFile};
use qshearer_core::indpoly::{
    certify_polynomial, independence_polynomial_with_budget, DEFAULT_VERTEX_BUDGET,
};
use qshearer_core::{
    build_dependency_graph, first_negative_zero, generate, poisson_degree_stats, EnsembleSpec, InteractionHypergraph,
    QuditPlacement,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{fmt_f64, Ctx, Table};
use crate::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Chain,
    Cycle,
    Star,
    Tree,
    Square,
    Triangular,
    Hexagonal,
    Checkerboard,
    Cubic,
    Er,
    Regular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Vertices,
    Edges,
}

impl From<Placement> for QuditPlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Vertices => QuditPlacement::VerticesAsQudits,
            Placement::Edges => QuditPlacement::EdgesAsQudits,
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenGraphArgs {
    #[arg(long, value_enum)]
    kind: GraphKind,
    /// Number of qudits (chain, cycle, er, regular).
    #[arg(long)]
    n: Option<usize>,
    /// Edges at the centre of a star.
    #[arg(long)]
    z: Option<usize>,
    /// Edge size (star, tree, er, regular).
    #[arg(long)]
    k: Option<usize>,
    /// Qudit degree (tree, regular).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Lattice rows; the cubic lattice is `rows x cols x layers`.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// Edges per qudit for the er ensemble.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lattice qudit placement; defaults to qudits on lattice edges.
    #[arg(long, value_enum)]
    placement: Option<Placement>,
}

fn need<T>(v: Option<T>, flag: &str, kind: GraphKind) -> Result<T> {
    v.ok_or_else(|| anyhow!("--{flag} is required for --kind {}", kind_name(kind)))
}

fn kind_name(kind: GraphKind) -> String {
    kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn ensemble(a: &GenGraphArgs) -> Result<EnsembleSpec> {
    let kind = a.kind;
    let placement = a.placement.unwrap_or(Placement::Edges).into();
    Ok(match kind {
        GraphKind::Chain => EnsembleSpec::Chain { n: need(a.n, "n", kind)? },
        GraphKind::Cycle => EnsembleSpec::Cycle { n: need(a.n, "n", kind)? },
        GraphKind::Star => EnsembleSpec::Star {
            z: need(a.z, "z", kind)?,
            k: need(a.k, "k", kind)?,
        },
        GraphKind::Tree => EnsembleSpec::RegularTreePatch {
            t: need(a.t, "t", kind)?,
            k: need(a.k, "k", kind)?,
            depth: need(a.depth, "depth", kind)?,
        },
        GraphKind::Square => EnsembleSpec::SquareLattice {
            rows: need(a.rows, "rows", kind)?,
            cols: need(a.cols, "cols", kind)?,
            placement,
        },
        GraphKind::Triangular => EnsembleSpec::TriangularLattice {
            rows: need(a.rows, "rows", kind)?,
            cols: need(a.cols, "cols", kind)?,
            placement,
        },
        GraphKind::Hexagonal => EnsembleSpec::HexagonalLattice {
            rows: need(a.rows, "rows", kind)?,
            cols: need(a.cols, "cols", kind)?,
            placement,
        },
        GraphKind::Checkerboard => EnsembleSpec::Checkerboard {
            rows: need(a.rows, "rows", kind)?,
            cols: need(a.cols, "cols", kind)?,
        },
        GraphKind::Cubic => EnsembleSpec::CubicLattice {
            nx: need(a.rows, "rows", kind)?,
            ny: need(a.cols, "cols", kind)?,
            nz: need(a.layers, "layers", kind)?,
            placement,
        },
        GraphKind::Er => EnsembleSpec::ErRandom {
            n: need(a.n, "n", kind)?,
            alpha: need(a.alpha, "alpha", kind)?,
            k: need(a.k, "k", kind)?,
            seed: a.seed,
        },
        GraphKind::Regular => EnsembleSpec::RegularRandom {
            n: need(a.n, "n", kind)?,
            t: need(a.t, "t", kind)?,
            k: need(a.k, "k", kind)?,
            seed: a.seed,
        },
    })
}

pub fn gen_graph(ctx: &mut Ctx, a: GenGraphArgs) -> Result<Status> {
    ctx.start("gen-graph", &a)?;
    let spec = ensemble(&a)?;
    if matches!(a.kind, GraphKind::Er | GraphKind::Regular) {
        ctx.manifest.seeds.push(a.seed);
    }
    let h = generate(&spec)?;
    let stats = poisson_degree_stats(&h, usize::MAX);
    let meta = ctx.hypergraph_meta(json!({ "spec": spec, "mean_degree": stats.mean }));
    let file = HypergraphFile::new(&h, meta);
    ctx.write_json_value(&serde_json::to_value(file)?)?;
    Ok(Status::Ok)
}

pub(crate) fn load_graph(ctx: &mut Ctx, path: &Path) -> Result<InteractionHypergraph> {
    let text = ctx.read_input(path)?;
    let (h, _) = parse_hypergraph(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(h)
}


#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndpolyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Also write the coefficients to this file.
    #[arg(long)]
    poly_out: Option<PathBuf>,
    /// Largest dependency graph handled exactly.
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

pub fn indpoly(ctx: &mut Ctx, a: IndpolyArgs) -> Result<Status> {
    ctx.start("indpoly", &a)?;
    let h = load_graph(ctx, &a.graph)?;
    let g = build_dependency_graph(&h);
    let poly = independence_polynomial_with_budget(&g, a.budget)?;
    let p_c = if poly.degree() == 0 { None } else { Some(first_negative_zero(&poly)?) };
    if let Some(path) = &a.poly_out {
        ctx.write_file_with_manifest(path, serde_json::to_value(&poly)?)?;
    }
    let mut result = serde_json::to_value(&poly)?;
    result["n_vertices"] = json!(g.n_vertices());
    result["n_dependency_edges"] = json!(g.n_edges());
    result["independence_number"] = json!(poly.degree());
    result["p_c"] = json!(p_c);
    ctx.emit_json(&result)?;
    Ok(Status::Ok)
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CertifyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Relative rank of every projector.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    qudit_dim: usize,
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

pub fn certify(ctx: &mut Ctx, a: CertifyArgs) -> Result<Status> {
    ctx.start("certify", &a)?;
    let h = load_graph(ctx, &a.graph)?;
    let g = build_dependency_graph(&h);
    let poly = independence_polynomial_with_budget(&g, a.budget)?;
    let cert = certify_polynomial(&poly, a.p, a.qudit_dim, h.n_qudits())?;
    ctx.emit_json(&cert)?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    Chain,
    Triangular,
    SquareEdges,
    SquareVertices,
    Checkerboard,
    Hexagonal,
    Cubic,
    Tree,
}

impl Lattice {
    /// Infinite-lattice threshold from the literature table.
    fn table_value(self, t: usize) -> f64 {
        match self {
            Self::Chain => 0.25,
            Self::Triangular => (5.0 * 5f64.sqrt() - 11.0) / 2.0,
            Self::SquareEdges => 0.1193,
            Self::SquareVertices => 0.0889,
            Self::Checkerboard => 0.0688,
            Self::Hexagonal => 0.1547,
            Self::Cubic => 0.0744,
            Self::Tree => 1.0 / (4.0 * (t as f64 - 1.0)),
        }
    }

    fn spec(self, size: usize, t: usize) -> EnsembleSpec {
        let edges = QuditPlacement::EdgesAsQudits;
        match self {
            Self::Chain => EnsembleSpec::Chain { n: size },
            Self::Triangular => EnsembleSpec::TriangularLattice { rows: size, cols: size, placement: edges },
            Self::SquareEdges => EnsembleSpec::SquareLattice { rows: size, cols: size, placement: edges },
            Self::SquareVertices => EnsembleSpec::SquareLattice {
                rows: size,
                cols: size,
                placement: QuditPlacement::VerticesAsQudits,
            },
            Self::Checkerboard => EnsembleSpec::Checkerboard { rows: size, cols: size },
            Self::Hexagonal => EnsembleSpec::HexagonalLattice { rows: size, cols: size, placement: edges },
            Self::Cubic => EnsembleSpec::CubicLattice { nx: size, ny: size, nz: size, placement: edges },
            Self::Tree => EnsembleSpec::RegularTreePatch { t, k: 2, depth: size },
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Table1Args {
    #[arg(long, value_enum)]
    lattice: Lattice,
    /// Patch sizes: side length for lattices, qudits for the chain, depth
    /// for the tree.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Qudit degree of the tree.
    #[arg(long, default_value_t = 3)]
    t: usize,
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

#[derive(Debug, Serialize)]
struct Table1Row {
    size: usize,
    n_qudits: usize,
    n_projectors: usize,
    p_c: f64,
    above_table: bool,
}

pub fn reproduce_table1(ctx: &mut Ctx, a: Table1Args) -> Result<Status> {
    ctx.start("reproduce-table1", &a)?;
    if a.lattice == Lattice::Tree && a.t < 2 {
        bail!("--t must be at least 2");
    }
    let table = a.lattice.table_value(a.t);
    let mut rows = Vec::new();
    for &size in &a.sizes {
        let h = generate(&a.lattice.spec(size, a.t))?;
        let g = build_dependency_graph(&h);
        let poly = independence_polynomial_with_budget(&g, a.budget)?;
        let p_c = first_negative_zero(&poly)?;
        rows.push(Table1Row {
            size,
            n_qudits: h.n_qudits(),
            n_projectors: h.n_edges(),
            p_c,
            above_table: p_c >= table,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].p_c <= w[0].p_c);
    let mut csv = Table::new(&["size", "n_qudits", "n_projectors", "p_c", "table_p_c", "above_table"]);
    for r in &rows {
        csv.push(vec![
            r.size.to_string(),
            r.n_qudits.to_string(),
            r.n_projectors.to_string(),
            fmt_f64(r.p_c),
            fmt_f64(table),
            r.above_table.to_string(),
        ]);
    }
    ctx.emit_csv(&csv)?;
    ctx.emit_json_if_requested(&json!({
        "lattice": a.lattice,
        "table_p_c": table,
        "rows": rows,
        "all_above_table": rows.iter().all(|r| r.above_table),
        "decreasing": decreasing,
    }))?;
    Ok(Status::Ok)
}
