//! Random quadratic test problems and their text file format.
//!
//! ```text
//! uqbo d=3 dist=uniform(c=100) seed=7
//! 12 -40 3
//! -40 0 88
//! 3 88 -9
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::QuadraticObjective;

/// The Cauchy law is truncated to `|k| ≤ CAUCHY_TRUNCATION · c`.
pub const CAUCHY_TRUNCATION: i64 = 10_000;

/// Law of the matrix entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// Uniform on `{−c, …, c}`.
    Uniform { c: i64 },
    /// Uniform on `{−c + τ, …, c + τ}`, built as the uniform instance plus `τ`.
    Shifted { c: i64, tau: i64 },
    /// With probability `ω` uniform on `{−c, …, c}`, else zero.
    Density { c: i64, omega: f64 },
    /// `P(k) ∝ 1/(1 + (k/c)²)` on the truncated integer support.
    Cauchy { c: i64 },
    /// Hand-written matrix with no generator.
    Custom,
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        match *self {
            Distribution::Uniform { c } | Distribution::Cauchy { c } if c < 1 => bad(format!("c = {c} must be ≥ 1")),
            Distribution::Shifted { c, tau } => {
                if c < 1 {
                    bad(format!("c = {c} must be ≥ 1"))
                } else if tau.abs() > c {
                    bad(format!("tau = {tau} must lie in [-c, c]"))
                } else {
                    Ok(())
                }
            }
            Distribution::Density { c, omega } => {
                if c < 1 {
                    bad(format!("c = {c} must be ≥ 1"))
                } else if !(omega > 0.0 && omega <= 1.0) {
                    bad(format!("omega = {omega} must lie in (0, 1]"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// The shift criterion `ρ̄`; defined for the uniform-based laws.
    pub fn rho_bar(&self) -> Option<f64> {
        match *self {
            Distribution::Uniform { c } | Distribution::Density { c, .. } => Some(rho_bar(c, 0)),
            Distribution::Shifted { c, tau } => Some(rho_bar(c, tau)),
            Distribution::Cauchy { .. } | Distribution::Custom => None,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform { c } => write!(f, "uniform(c={c})"),
            Distribution::Shifted { c, tau } => write!(f, "shifted(c={c},tau={tau})"),
            Distribution::Density { c, omega } => write!(f, "density(c={c},omega={omega})"),
            Distribution::Cauchy { c } => write!(f, "cauchy(c={c})"),
            Distribution::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unrecognized distribution '{s}'"));
        if s == "custom" {
            return Ok(Distribution::Custom);
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let mut c = None;
        let mut tau = None;
        let mut omega = None;
        for pair in args.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(bad)?;
            match key.trim() {
                "c" => c = Some(value.trim().parse::<i64>().map_err(|_| bad())?),
                "tau" => tau = Some(value.trim().parse::<i64>().map_err(|_| bad())?),
                "omega" => omega = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let c = c.ok_or_else(bad)?;
        let dist = match (name, tau, omega) {
            ("uniform", None, None) => Distribution::Uniform { c },
            ("shifted", Some(tau), None) => Distribution::Shifted { c, tau },
            ("density", None, Some(omega)) => Distribution::Density { c, omega },
            ("cauchy", None, None) => Distribution::Cauchy { c },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub dist: Distribution,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(dim: usize, dist: Distribution, seed: u64) -> Self {
        Self { dim, dist, seed }
    }

    /// Short identifier such as `d15-cauchy(c=100)-s3`.
    pub fn label(&self) -> String {
        format!("d{}-{}-s{}", self.dim, self.dist, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub spec: ProblemSpec,
    pub obj: QuadraticObjective,
    pub rho_bar: Option<f64>,
}

/// `ρ̄ = 1/2 + (τ + 2τc) / (2(τ² + c² + c))`.
pub fn rho_bar(c: i64, tau: i64) -> f64 {
    let (c, tau) = (c as f64, tau as f64);
    0.5 + (tau + 2.0 * tau * c) / (2.0 * (tau * tau + c * c + c))
}

/// Draws the upper triangle row by row from the entry law and mirrors it.
pub fn generate(spec: &ProblemSpec) -> Result<ProblemInstance> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::Validation("dimension must be at least 1".into()));
    }
    spec.dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let coeffs = match spec.dist {
        Distribution::Uniform { c } => fill(d, || rng.random_range(-c..=c) as f64),
        Distribution::Shifted { c, tau } => {
            let mut f = fill(d, || rng.random_range(-c..=c) as f64);
            f.iter_mut().for_each(|v| *v += tau as f64);
            f
        }
        Distribution::Density { c, omega } => fill(d, || {
            if rng.random::<f64>() < omega {
                rng.random_range(-c..=c) as f64
            } else {
                0.0
            }
        }),
        Distribution::Cauchy { c } => {
            let table = CauchyTable::new(c);
            fill(d, || table.sample(&mut rng) as f64)
        }
        Distribution::Custom => {
            return Err(Error::Validation("custom problems cannot be generated".into()));
        }
    };
    Ok(ProblemInstance {
        rho_bar: spec.dist.rho_bar(),
        obj: QuadraticObjective::new(d, coeffs)?,
        spec: spec.clone(),
    })
}

fn fill(d: usize, mut draw: impl FnMut() -> f64) -> Vec<f64> {
    let mut f = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = draw();
            f[i * d + j] = v;
            f[j * d + i] = v;
        }
    }
    f
}

/// Inverse-CDF sampler for the truncated discrete Cauchy law. The table
/// holds the cumulative mass of `|k|`; the sign is drawn separately.
pub struct CauchyTable {
    cdf: Vec<f64>,
}

impl CauchyTable {
    pub fn new(c: i64) -> Self {
        let cf = c as f64;
        let max = CAUCHY_TRUNCATION * c;
        let mass = |k: i64| 1.0 / (1.0 + (k as f64 / cf).powi(2));
        let mut cdf = Vec::with_capacity(max as usize + 1);
        let mut acc = 0.0;
        for k in 0..=max {
            acc += if k == 0 { mass(0) } else { 2.0 * mass(k) };
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|v| *v /= acc);
        Self { cdf }
    }

    /// Probability of the value `k`.
    pub fn pmf(&self, k: i64) -> f64 {
        let a = k.unsigned_abs() as usize;
        if a >= self.cdf.len() {
            return 0.0;
        }
        let p = if a == 0 {
            self.cdf[0]
        } else {
            self.cdf[a] - self.cdf[a - 1]
        };
        if a == 0 {
            p
        } else {
            p / 2.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let a = self.cdf.partition_point(|&v| v <= u).min(self.cdf.len() - 1) as i64;
        if a == 0 || rng.random::<bool>() {
            a
        } else {
            -a
        }
    }
}

impl ProblemInstance {
    /// A hand-written instance.
    pub fn custom(obj: QuadraticObjective) -> Self {
        Self {
            spec: ProblemSpec::new(obj.dim(), Distribution::Custom, 0),
            obj,
            rho_bar: None,
        }
    }

    pub fn to_text(&self) -> String {
        let d = self.obj.dim();
        let mut out = format!("uqbo d={d} dist={} seed={}\n", self.spec.dist, self.spec.seed);
        for i in 0..d {
            let row: Vec<String> = self.obj.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses the text format; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("uqbo") {
            return Err(parse_err(hline, "header must start with 'uqbo'".into()));
        }
        let (mut dim, mut dist, mut seed) = (None, None, None);
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| parse_err(hline, format!("malformed header field '{tok}'")))?;
            match key {
                "d" => {
                    dim = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| parse_err(hline, format!("bad dimension '{value}'")))?,
                    )
                }
                "dist" => {
                    dist = Some(
                        value
                            .parse::<Distribution>()
                            .map_err(|e| parse_err(hline, e.to_string()))?,
                    )
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| parse_err(hline, format!("bad seed '{value}'")))?,
                    )
                }
                _ => return Err(parse_err(hline, format!("unknown header field '{key}'"))),
            }
        }
        let dim = dim.ok_or_else(|| parse_err(hline, "missing d=".into()))?;
        let dist = dist.unwrap_or(Distribution::Custom);
        let seed = seed.unwrap_or(0);
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }

        let mut coeffs = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (lineno, line) in lines {
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(lineno, format!("bad number '{t}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "line {lineno}: expected {dim} entries, found {}",
                    row.len()
                )));
            }
            rows += 1;
            if rows > dim {
                return Err(Error::Validation(format!("line {lineno}: more than {dim} matrix rows")));
            }
            coeffs.extend(row);
        }
        if rows != dim {
            return Err(Error::Validation(format!("expected {dim} matrix rows, found {rows}")));
        }
        let obj = QuadraticObjective::new(dim, coeffs)?;
        Ok(Self {
            rho_bar: dist.rho_bar(),
            spec: ProblemSpec::new(dim, dist, seed),
            obj,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::BinaryVector;

    fn spec(dim: usize, dist: Distribution, seed: u64) -> ProblemSpec {
        ProblemSpec::new(dim, dist, seed)
    }

    #[test]
    fn rho_bar_examples() {
        assert_eq!(rho_bar(100, 0), 0.5);
        assert!((rho_bar(100, 100) - 1.0).abs() < 1e-15);
        assert!(rho_bar(100, -100).abs() < 1e-15);
    }

    #[test]
    fn uniform_entries_in_range_and_symmetric() {
        let inst = generate(&spec(40, Distribution::Uniform { c: 100 }, 1)).unwrap();
        let d = 40;
        for i in 0..d {
            for j in 0..d {
                let v = inst.obj.coeff(i, j);
                assert!((-100.0..=100.0).contains(&v) && v.fract() == 0.0);
                assert_eq!(v, inst.obj.coeff(j, i));
            }
        }
        assert_eq!(inst.rho_bar, Some(0.5));
    }

    #[test]
    fn uniform_chi_square() {
        // 1414·1415/2 ≈ 10⁶ upper-triangle draws; 200 degrees of freedom,
        // 1% critical value 265.0 (chi-square quantile).
        let d = 1414;
        let c = 100;
        let inst = generate(&spec(d, Distribution::Uniform { c }, 2)).unwrap();
        let mut counts = vec![0u64; 201];
        let mut draws = 0u64;
        for i in 0..d {
            for j in i..d {
                counts[(inst.obj.coeff(i, j) as i64 + c) as usize] += 1;
                draws += 1;
            }
        }
        let expected = draws as f64 / 201.0;
        let chi2: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 265.0, "chi2 = {chi2}");
    }

    #[test]
    fn shift_is_constructive() {
        let base = generate(&spec(12, Distribution::Uniform { c: 50 }, 3)).unwrap();
        let shifted = generate(&spec(12, Distribution::Shifted { c: 50, tau: 7 }, 3)).unwrap();
        for (a, b) in shifted.obj.coeffs().iter().zip(base.obj.coeffs()) {
            assert_eq!(a - b, 7.0);
        }
        // f_τ(x) = f₀(x) + τ|x|².
        let x = BinaryVector::new(vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0]).unwrap();
        let k = x.count_ones() as f64;
        assert_eq!(
            shifted.obj.evaluate(&x).unwrap(),
            base.obj.evaluate(&x).unwrap() + 7.0 * k * k
        );
        assert_eq!(shifted.rho_bar, Some(rho_bar(50, 7)));
    }

    #[test]
    fn density_zero_fraction() {
        let d = 300;
        let inst = generate(&spec(d, Distribution::Density { c: 100, omega: 0.3 }, 4)).unwrap();
        let mut zeros = 0usize;
        let mut total = 0usize;
        for i in 0..d {
            for j in i + 1..d {
                total += 1;
                zeros += usize::from(inst.obj.coeff(i, j) == 0.0);
            }
        }
        // A uniform draw is zero with probability 1/201 as well.
        let p = 0.7 + 0.3 / 201.0;
        let se = (p * (1.0 - p) / total as f64).sqrt();
        assert!((zeros as f64 / total as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn cauchy_has_heavy_tails() {
        let d = 200;
        let c = 100;
        let cauchy = generate(&spec(d, Distribution::Cauchy { c }, 5)).unwrap();
        let uniform = generate(&spec(d, Distribution::Uniform { c }, 5)).unwrap();
        let tail = |inst: &ProblemInstance| inst.obj.coeffs().iter().filter(|v| v.abs() > 10.0 * c as f64).count();
        assert_eq!(tail(&uniform), 0);
        assert!(tail(&cauchy) > 0);
        assert!(cauchy
            .obj
            .coeffs()
            .iter()
            .all(|v| v.abs() <= (CAUCHY_TRUNCATION * c) as f64));
    }

    #[test]
    fn cauchy_table_matches_pmf() {
        let c = 5;
        let table = CauchyTable::new(c);
        let z: f64 = (-CAUCHY_TRUNCATION * c..=CAUCHY_TRUNCATION * c)
            .map(|k| 1.0 / (1.0 + (k as f64 / c as f64).powi(2)))
            .sum();
        for k in [-7, 0, 3, 25] {
            let exact = 1.0 / (1.0 + (k as f64 / c as f64).powi(2)) / z;
            assert!((table.pmf(k) - exact).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 200_000;
        let zeros = (0..n).filter(|_| table.sample(&mut rng) == 0).count();
        let p = table.pmf(0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn generation_is_deterministic() {
        for dist in [
            Distribution::Uniform { c: 10 },
            Distribution::Shifted { c: 10, tau: -3 },
            Distribution::Density { c: 10, omega: 0.5 },
            Distribution::Cauchy { c: 10 },
        ] {
            let s = spec(9, dist, 11);
            assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        }
        let a = generate(&spec(9, Distribution::Uniform { c: 10 }, 1)).unwrap();
        let b = generate(&spec(9, Distribution::Uniform { c: 10 }, 2)).unwrap();
        assert_ne!(a.obj, b.obj);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&spec(3, Distribution::Uniform { c: 0 }, 0)).is_err());
        assert!(generate(&spec(3, Distribution::Shifted { c: 5, tau: 6 }, 0)).is_err());
        assert!(generate(&spec(3, Distribution::Density { c: 5, omega: 0.0 }, 0)).is_err());
        assert!(generate(&spec(0, Distribution::Uniform { c: 5 }, 0)).is_err());
        assert!(generate(&spec(3, Distribution::Custom, 0)).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for (k, dist) in [
            Distribution::Uniform { c: 100 },
            Distribution::Shifted { c: 100, tau: -40 },
            Distribution::Density { c: 100, omega: 0.25 },
            Distribution::Cauchy { c: 100 },
        ]
        .into_iter()
        .enumerate()
        {
            let inst = generate(&spec(7, dist, 42 + k as u64)).unwrap();
            let path = dir.path().join(format!("p{k}.txt"));
            inst.save(&path).unwrap();
            assert_eq!(ProblemInstance::load(&path).unwrap(), inst);
        }
        // Non-integer entries also survive exactly.
        let obj = QuadraticObjective::from_rows(&[vec![0.1, 1.0 / 3.0], vec![1.0 / 3.0, -2.5e-300]]).unwrap();
        let inst = ProblemInstance::custom(obj);
        let path = dir.path().join("custom.txt");
        inst.save(&path).unwrap();
        assert_eq!(ProblemInstance::load(&path).unwrap(), inst);
    }

    #[test]
    fn hand_written_file() {
        let text = "uqbo d=2 dist=custom seed=0\n1 2\n2 1\n";
        let inst = ProblemInstance::parse(text, Path::new("hand.txt")).unwrap();
        assert_eq!(inst.obj.evaluate(&BinaryVector::ones(2)).unwrap(), 6.0);
        assert_eq!(inst.rho_bar, None);
    }

    #[test]
    fn malformed_files() {
        let p = Path::new("bad.txt");
        let asym = ProblemInstance::parse("uqbo d=2 dist=custom seed=0\n1 2\n3 1\n", p).unwrap_err();
        assert!(matches!(asym, Error::NotSymmetric { .. }));
        assert!(asym.is_validation());
        let short = ProblemInstance::parse("uqbo d=3 dist=custom seed=0\n1 2 3\n2 1 0\n", p).unwrap_err();
        assert!(matches!(short, Error::Validation(_)));
        let ragged = ProblemInstance::parse("uqbo d=2 dist=custom seed=0\n1 2 3\n2 1\n", p).unwrap_err();
        assert!(matches!(ragged, Error::Validation(_)));
        match ProblemInstance::parse("uqbo d=2 dist=custom seed=0\n1 2\n2 x\n", p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        match ProblemInstance::parse("qubo d=2\n1 2\n2 1\n", p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn distribution_strings_round_trip() {
        for dist in [
            Distribution::Uniform { c: 100 },
            Distribution::Shifted { c: 100, tau: -3 },
            Distribution::Density { c: 100, omega: 0.3 },
            Distribution::Cauchy { c: 7 },
            Distribution::Custom,
        ] {
            assert_eq!(dist.to_string().parse::<Distribution>().unwrap(), dist);
        }
        assert!("gauss(c=1)".parse::<Distribution>().is_err());
    }
}
