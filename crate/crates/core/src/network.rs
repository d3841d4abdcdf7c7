//! Agent models and their block-diagonal network aggregate.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix, Vector};
use crate::privacy::{self, NoiseScale, PrivacySpec};
use crate::riccati::{self, ControlSynthesis, FilterSynthesis};
use crate::rng::GaussianStream;
use crate::{Error, Result};

/// One agent: dynamics `x⁺ = A x + B u + w`, `w ~ N(0, W)`, output `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub w: Matrix,
    pub privacy: PrivacySpec,
    /// Public `E[x_i(0)]`.
    pub x0_mean: Vector,
    /// Secret initial state, used by the simulator only.
    pub x0_true: Vector,
    /// Optional spread of the secret initial state around `x0_true`.
    pub x0_covariance: Option<Matrix>,
}

impl AgentModel {
    /// Builds an agent whose secret initial state equals the public mean.
    pub fn new(a: Matrix, b: Matrix, c: Matrix, w: Matrix, privacy: PrivacySpec, x0_mean: Vector) -> Result<Self> {
        let n = linalg::ensure_square("A_i", &a)?;
        linalg::ensure_shape("B_i", &b, n, b.ncols())?;
        linalg::ensure_shape("C_i", &c, n, n)?;
        linalg::ensure_shape("W_i", &w, n, n)?;
        if x0_mean.len() != n {
            return Err(Error::len("x0 mean", n, x0_mean.len()));
        }
        for (name, m) in [("A_i", &a), ("B_i", &b), ("C_i", &c), ("W_i", &w)] {
            linalg::ensure_finite(name, m)?;
        }
        if !linalg::is_positive_definite(&w) {
            return Err(Error::NotPositiveDefinite("W_i"));
        }
        Ok(Self {
            x0_true: x0_mean.clone(),
            a,
            b,
            c,
            w,
            privacy,
            x0_mean,
            x0_covariance: None,
        })
    }

    pub fn with_true_initial_state(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.state_dim() {
            return Err(Error::len("x0", self.state_dim(), x0.len()));
        }
        self.x0_true = x0;
        Ok(self)
    }

    pub fn with_initial_covariance(mut self, cov: Matrix) -> Result<Self> {
        let n = self.state_dim();
        linalg::ensure_shape("initial covariance", &cov, n, n)?;
        linalg::psd_factor(&cov)?;
        self.x0_covariance = Some(cov);
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn noise_scale(&self) -> Result<NoiseScale> {
        privacy::calibrate_sigma(&self.privacy, &self.c)
    }
}

/// Where an agent's blocks sit inside the network vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentBlock {
    pub state_offset: usize,
    pub state_dim: usize,
    pub input_offset: usize,
    pub input_dim: usize,
}

impl AgentBlock {
    pub fn state<'a>(&self, x: &'a Vector) -> nalgebra::DVectorView<'a, f64> {
        x.rows(self.state_offset, self.state_dim)
    }

    pub fn input<'a>(&self, u: &'a Vector) -> nalgebra::DVectorView<'a, f64> {
        u.rows(self.input_offset, self.input_dim)
    }
}

/// Network-level model `x⁺ = A x + B u + w`, `ȳ = C x + v`, cost `(Q, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub w: Matrix,
    /// `diag(σ_1² I, …, σ_N² I)`.
    pub v: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub blocks: Vec<AgentBlock>,
    pub noise: Vec<NoiseScale>,
}

/// Everything the cloud precomputes before the first round.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub control: ControlSynthesis,
    pub filter: FilterSynthesis,
}

impl NetworkModel {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn agent_count(&self) -> usize {
        self.blocks.len()
    }

    /// Solves both Riccati equations.
    pub fn synthesize(&self) -> Result<Synthesis> {
        let control = riccati::solve_dare_control(&self.a, &self.b, &self.q, &self.r)?;
        let filter = riccati::solve_dare_filter(&self.a, &self.c, &self.w, &self.v)?;
        Ok(Synthesis { control, filter })
    }
}

/// Builds the direct sums of the agents' matrices, calibrates `V` and checks
/// the standing assumptions: `Q ≻ 0`, `R ≻ 0`, `(A, B)` controllable,
/// `(A, F)` observable for `Q = FᵀF`, and `(A, C)` observable.
pub fn assemble_network(agents: &[AgentModel], q: &Matrix, r: &Matrix) -> Result<NetworkModel> {
    if agents.is_empty() {
        return Err(Error::InvalidParameter("a network needs at least one agent".into()));
    }
    let mut blocks = Vec::with_capacity(agents.len());
    let (mut n, mut m) = (0, 0);
    for agent in agents {
        blocks.push(AgentBlock {
            state_offset: n,
            state_dim: agent.state_dim(),
            input_offset: m,
            input_dim: agent.input_dim(),
        });
        n += agent.state_dim();
        m += agent.input_dim();
    }
    linalg::ensure_shape("Q", q, n, n)?;
    linalg::ensure_shape("R", r, m, m)?;
    linalg::ensure_finite("Q", q)?;
    linalg::ensure_finite("R", r)?;

    let noise = agents.iter().map(AgentModel::noise_scale).collect::<Result<Vec<_>>>()?;
    let collect = |f: fn(&AgentModel) -> &Matrix| agents.iter().map(f).cloned().collect::<Vec<_>>();
    let v_blocks: Vec<Matrix> = agents
        .iter()
        .zip(&noise)
        .map(|(agent, s)| Matrix::identity(agent.state_dim(), agent.state_dim()) * s.variance())
        .collect();

    let model = NetworkModel {
        a: linalg::block_diag(&collect(|a| &a.a)),
        b: linalg::block_diag(&collect(|a| &a.b)),
        c: linalg::block_diag(&collect(|a| &a.c)),
        w: linalg::block_diag(&collect(|a| &a.w)),
        v: linalg::block_diag(&v_blocks),
        q: q.clone(),
        r: r.clone(),
        blocks,
        noise,
    };
    check_assumptions(&model)?;
    Ok(model)
}

pub fn check_assumptions(model: &NetworkModel) -> Result<()> {
    if !linalg::is_positive_definite(&model.q) {
        return Err(Error::NotPositiveDefinite("Q"));
    }
    if !linalg::is_positive_definite(&model.r) {
        return Err(Error::NotPositiveDefinite("R"));
    }
    riccati::check_controllable(&model.a, &model.b)?;
    riccati::check_cost_observable(&model.a, &model.q)?;
    riccati::check_observable(&model.a, &model.c, "C")
}

/// `x⁺ = A x + B u + w` with `w = F z`, `F Fᵀ = W`, `z` standard normal.
pub fn agent_step(
    a: &Matrix,
    b: &Matrix,
    w: &Matrix,
    x: &Vector,
    u: &Vector,
    stream: &mut GaussianStream,
) -> Result<Vector> {
    let factor = linalg::psd_factor(w)?;
    step_with_factor(a, b, &factor, x, u, stream)
}

pub(crate) fn step_with_factor(
    a: &Matrix,
    b: &Matrix,
    factor: &Matrix,
    x: &Vector,
    u: &Vector,
    stream: &mut GaussianStream,
) -> Result<Vector> {
    let n = a.nrows();
    linalg::ensure_shape("B_i", b, n, u.len())?;
    if x.len() != n {
        return Err(Error::len("agent state", n, x.len()));
    }
    linalg::ensure_shape("noise factor", factor, n, n)?;
    let z = stream.standard_normal_vector(n);
    Ok(a * x + b * u + factor * z)
}

/// Random positive definite `GᵀG + 0.1·I` with `G` i.i.d. standard normal,
/// filled row-major from `GaussianStream::new(seed)`.
pub fn random_positive_definite(dim: usize, seed: u64) -> Matrix {
    let mut stream = GaussianStream::new(seed);
    let mut g = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = stream.next_standard_normal();
        }
    }
    linalg::symmetrize(&(g.transpose() * &g + Matrix::identity(dim, dim) * 0.1))
}
