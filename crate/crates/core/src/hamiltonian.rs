//! Pinned, piecewise-convex Hamiltonians `H(x, p)`.
//!
//! A Hamiltonian is an ordered list of closed-form pieces separated by pins
//! `p_1 < ... < p_n`; piece `i` is selected on `[p_{i-1}, p_i]`. Each piece has
//! the form
//!
//! ```text
//! H_i(x, p) = (c / g) |q|^g + (s + s_m f(x)) q + h + h_m f(x),    q = p - center
//! ```
//!
//! where `f` is an optional medium field. Writing pieces relative to a center
//! lets a pin sit exactly at `center`, where the medium terms drop out.

use crate::error::{invalid, Error, Result};
use crate::media::MediumSample;
use crate::report::VerificationReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Agreement required between adjacent pieces at a pin.
pub const PIN_TOLERANCE: f64 = 1e-12;
/// Slack allowed on discrete second differences.
pub const CONVEXITY_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub gamma: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl ClassParams {
    pub fn new(gamma: f64, alpha0: f64, beta0: f64) -> Result<Self> {
        let c = Self {
            gamma,
            alpha0,
            beta0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(invalid("class.gamma", "must exceed 1"));
        }
        if !(self.alpha0 > 0.0) {
            return Err(invalid("class.alpha0", "must be positive"));
        }
        if !(self.beta0 > 0.0) {
            return Err(invalid("class.beta0", "must be positive"));
        }
        Ok(())
    }

    /// Lower coercivity envelope `alpha(R) = alpha0 R^gamma - 1/alpha0`.
    pub fn alpha(&self, r: f64) -> f64 {
        self.alpha0 * r.abs().powf(self.gamma) - 1.0 / self.alpha0
    }

    /// Upper growth envelope `beta(R) = beta0 (R^gamma + 1)`.
    pub fn beta(&self, r: f64) -> f64 {
        self.beta0 * (r.abs().powf(self.gamma) + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceForm {
    /// `gamma = 2`.
    Quadratic,
    /// General exponent; `gamma <= 1` gives a level-set convex piece.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coeffs {
    pub curvature: f64,
    pub center: f64,
    pub slope: f64,
    pub slope_medium: f64,
    pub offset: f64,
    pub offset_medium: f64,
    pub gamma: f64,
}

impl Default for Coeffs {
    fn default() -> Self {
        Self {
            curvature: 1.0,
            center: 0.0,
            slope: 0.0,
            slope_medium: 0.0,
            offset: 0.0,
            offset_medium: 0.0,
            gamma: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub form: PieceForm,
    pub coeffs: Coeffs,
    #[serde(default)]
    pub medium_ref: Option<String>,
}

/// Serialized Hamiltonian. Media are bound separately, by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDoc {
    pub pieces: Vec<PieceDoc>,
    #[serde(default)]
    pub pins: Vec<f64>,
    #[serde(default)]
    pub pinned_values: Vec<f64>,
    #[serde(default)]
    pub class: Option<ClassParams>,
}

#[derive(Clone, Debug)]
pub struct Piece {
    pub form: PieceForm,
    pub coeffs: Coeffs,
    medium: Option<(String, Arc<MediumSample>)>,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.form == other.form
            && self.coeffs == other.coeffs
            && match (&self.medium, &other.medium) {
                (None, None) => true,
                (Some((a, ma)), Some((b, mb))) => a == b && ma == mb,
                _ => false,
            }
    }
}

impl Piece {
    /// `(c/2) (p - center)^2 + slope (p - center) + offset`.
    pub fn quadratic(curvature: f64, center: f64, slope: f64, offset: f64) -> Self {
        Self {
            form: PieceForm::Quadratic,
            coeffs: Coeffs {
                curvature,
                center,
                slope,
                offset,
                ..Coeffs::default()
            },
            medium: None,
        }
    }

    /// `(c/gamma) |p - center|^gamma + slope (p - center) + offset`.
    pub fn power(gamma: f64, curvature: f64, center: f64, slope: f64, offset: f64) -> Self {
        Self {
            form: PieceForm::Power,
            coeffs: Coeffs {
                curvature,
                center,
                slope,
                offset,
                gamma,
                ..Coeffs::default()
            },
            medium: None,
        }
    }

    /// Attach a medium `f`: adds `slope_medium f(x) q + offset_medium f(x)`.
    pub fn with_medium(
        mut self,
        name: impl Into<String>,
        field: Arc<MediumSample>,
        slope_medium: f64,
        offset_medium: f64,
    ) -> Self {
        self.coeffs.slope_medium = slope_medium;
        self.coeffs.offset_medium = offset_medium;
        self.medium = Some((name.into(), field));
        self
    }

    pub fn medium(&self) -> Option<&MediumSample> {
        self.medium.as_ref().map(|(_, m)| m.as_ref())
    }

    pub fn medium_name(&self) -> Option<&str> {
        self.medium.as_ref().map(|(n, _)| n.as_str())
    }

    pub fn gamma(&self) -> f64 {
        match self.form {
            PieceForm::Quadratic => 2.0,
            PieceForm::Power => self.coeffs.gamma,
        }
    }

    /// Level-set convex but not convex.
    pub fn is_level_set_only(&self) -> bool {
        self.gamma() < 1.0
    }

    fn validate(&self) -> Result<()> {
        let c = &self.coeffs;
        let finite = [
            c.curvature,
            c.center,
            c.slope,
            c.slope_medium,
            c.offset,
            c.offset_medium,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("coeffs", "must be finite"));
        }
        if c.curvature < 0.0 {
            return Err(invalid("coeffs.curvature", "must be nonnegative"));
        }
        if self.form == PieceForm::Power && !(c.gamma > 0.0) {
            return Err(invalid("coeffs.gamma", "must be positive"));
        }
        if self.medium.is_none() && (c.slope_medium != 0.0 || c.offset_medium != 0.0) {
            return Err(invalid(
                "medium_ref",
                "medium coefficients are set but no medium is referenced",
            ));
        }
        Ok(())
    }

    /// Freeze the medium value at `x`.
    pub fn at(&self, x: f64) -> LocalPiece {
        let f = self.medium().map_or(0.0, |m| m.eval(x));
        let c = &self.coeffs;
        LocalPiece {
            gamma: self.gamma(),
            curvature: c.curvature,
            center: c.center,
            slope: c.slope + c.slope_medium * f,
            offset: c.offset + c.offset_medium * f,
        }
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        self.at(x).eval(p)
    }

    fn shifted(&self, p0: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.center -= p0;
        out
    }

    fn to_doc(&self) -> PieceDoc {
        PieceDoc {
            form: self.form,
            coeffs: self.coeffs,
            medium_ref: self.medium_name().map(str::to_owned),
        }
    }
}

/// A piece with its medium coefficient evaluated at a fixed `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalPiece {
    pub gamma: f64,
    pub curvature: f64,
    pub center: f64,
    pub slope: f64,
    pub offset: f64,
}

impl LocalPiece {
    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        let q = p - self.center;
        let lead = if self.gamma == 2.0 {
            0.5 * self.curvature * q * q
        } else {
            self.curvature / self.gamma * q.abs().powf(self.gamma)
        };
        lead + self.slope * q + self.offset
    }

    /// Derivative in `p` (one-sided limits agree except at a `gamma <= 1` kink).
    #[inline]
    pub fn deriv(&self, p: f64) -> f64 {
        let q = p - self.center;
        let lead = if self.gamma == 2.0 {
            self.curvature * q
        } else if q == 0.0 {
            0.0
        } else {
            self.curvature * q.abs().powf(self.gamma - 1.0) * q.signum()
        };
        lead + self.slope
    }

    /// Unconstrained minimizer of a convex piece, if one exists.
    #[inline]
    fn vertex(&self) -> Option<f64> {
        if self.curvature <= 0.0 {
            return None;
        }
        if self.gamma == 2.0 {
            Some(self.center - self.slope / self.curvature)
        } else {
            let s = self.slope;
            let mag = (s.abs() / self.curvature).powf(1.0 / (self.gamma - 1.0));
            Some(self.center - s.signum() * mag)
        }
    }

    /// `min H` over `[lo, hi]`.
    #[inline]
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        if self.gamma > 1.0 {
            match self.vertex() {
                Some(v) => self.eval(v.clamp(lo, hi)),
                None => self.eval(lo).min(self.eval(hi)),
            }
        } else {
            golden_min(|p| self.eval(p), lo, hi)
                .min(self.eval(lo))
                .min(self.eval(hi))
                .min(if (lo..=hi).contains(&self.center) {
                    self.eval(self.center)
                } else {
                    f64::INFINITY
                })
        }
    }
}

/// Golden-section minimization of a unimodal function, tolerance `1e-10` in `p`.
fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// All pieces frozen at one `x`, plus the shared pins.
#[derive(Clone, Copy, Debug)]
pub struct LocalHamiltonian<'a> {
    pub pieces: &'a [LocalPiece],
    pub pins: &'a [f64],
    pub pinned_values: &'a [f64],
}

impl<'a> LocalHamiltonian<'a> {
    #[inline]
    fn index(&self, p: f64) -> usize {
        self.pins.partition_point(|&q| q < p)
    }

    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        self.pieces[self.index(p)].eval(p)
    }

    /// One-sided derivative from the right at `p`.
    #[inline]
    fn deriv_right(&self, p: f64) -> f64 {
        self.pieces[self.pins.partition_point(|&q| q <= p)].deriv(p)
    }

    #[inline]
    fn deriv_left(&self, p: f64) -> f64 {
        self.pieces[self.index(p)].deriv(p)
    }

    /// `min H` over `[lo, hi]`, piece by piece.
    #[inline]
    pub fn min_over(&self, lo: f64, hi: f64) -> f64 {
        if self.pins.is_empty() {
            return self.pieces[0].min_on(lo, hi);
        }
        let mut k = self.index(lo);
        let mut a = lo;
        let mut best = f64::INFINITY;
        loop {
            let b = if k < self.pins.len() {
                self.pins[k].min(hi)
            } else {
                hi
            };
            best = best.min(self.pieces[k].min_on(a, b));
            if b >= hi {
                return best;
            }
            a = b;
            k += 1;
        }
    }

    /// `max H` over `[lo, hi]`: every piece is quasi-convex, so the maximum
    /// sits at an endpoint or at a pin.
    #[inline]
    pub fn max_over(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).max(self.eval(hi));
        let start = self.pins.partition_point(|&q| q <= lo);
        for k in start..self.pins.len() {
            if self.pins[k] >= hi {
                break;
            }
            best = best.max(self.pinned_values[k]);
        }
        best
    }

    /// Godunov numerical Hamiltonian.
    #[inline]
    pub fn godunov(&self, p_minus: f64, p_plus: f64) -> f64 {
        if p_minus <= p_plus {
            self.min_over(p_minus, p_plus)
        } else {
            self.max_over(p_plus, p_minus)
        }
    }

    /// `max |dH/dp|` over `[lo, hi]` (convex pieces: attained at sub-interval ends).
    #[inline]
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        let mut s = self.deriv_right(lo).abs().max(self.deriv_left(hi).abs());
        let start = self.pins.partition_point(|&q| q <= lo);
        for k in start..self.pins.len() {
            let pin = self.pins[k];
            if pin >= hi {
                break;
            }
            s = s
                .max(self.pieces[k].deriv(pin).abs())
                .max(self.pieces[k + 1].deriv(pin).abs());
        }
        if self.pins.is_empty() && self.pieces[0].gamma < 1.0 {
            return f64::INFINITY;
        }
        s
    }

    /// Local Lax-Friedrichs numerical Hamiltonian.
    #[inline]
    pub fn lax_friedrichs(&self, p_minus: f64, p_plus: f64) -> f64 {
        let (lo, hi) = if p_minus <= p_plus {
            (p_minus, p_plus)
        } else {
            (p_plus, p_minus)
        };
        let alpha = self.max_speed(lo, hi);
        self.eval(0.5 * (p_minus + p_plus)) - 0.5 * alpha * (p_plus - p_minus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XDependence {
    None,
    Periodic,
    StationaryRandom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pieces: Vec<Piece>,
    pins: Vec<f64>,
    pinned_values: Vec<f64>,
    class: ClassParams,
}

/// Probe grid for class and pin validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Probes {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl Probes {
    pub fn uniform(x_half_width: f64, nx: usize, p_radius: f64, np: usize) -> Self {
        let grid = |h: f64, n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| -h + 2.0 * h * i as f64 / (n - 1) as f64)
                .collect()
        };
        Self {
            xs: grid(x_half_width, nx),
            ps: grid(p_radius, np),
        }
    }

    /// Default probes: 41 x-points on `[-10, 10]` (offset off the lattice) and
    /// 401 p-points covering every pin with margin.
    pub fn default_for(pins: &[f64]) -> Self {
        let reach = pins.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let mut probes = Self::uniform(10.0, 41, 2.0 * reach + 4.0, 401);
        for x in &mut probes.xs {
            *x += 0.123_456_7;
        }
        probes
    }
}

impl HamiltonianSpec {
    /// Unvalidated assembly; prefer [`build_pinned`] or [`HamiltonianSpec::from_doc`].
    fn assemble(
        pieces: Vec<Piece>,
        pins: Vec<f64>,
        pinned_values: Vec<f64>,
        class: ClassParams,
    ) -> Self {
        Self {
            pieces,
            pins,
            pinned_values,
            class,
        }
    }

    /// A single convex piece with the given class.
    pub fn single(piece: Piece, class: ClassParams) -> Result<Self> {
        piece.validate()?;
        class.validate()?;
        Ok(Self::assemble(vec![piece], Vec::new(), Vec::new(), class))
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn pins(&self) -> &[f64] {
        &self.pins
    }

    pub fn pinned_values(&self) -> &[f64] {
        &self.pinned_values
    }

    pub fn class(&self) -> ClassParams {
        self.class
    }

    pub fn with_class(mut self, class: ClassParams) -> Result<Self> {
        class.validate()?;
        self.class = class;
        Ok(self)
    }

    pub fn x_dependence(&self) -> XDependence {
        let media: Vec<&MediumSample> = self.pieces.iter().filter_map(Piece::medium).collect();
        if media.iter().all(|m| m.spec().kind == crate::media::MediumKind::Constant) {
            XDependence::None
        } else if media.iter().all(|m| m.spec().is_periodic()) {
            XDependence::Periodic
        } else {
            XDependence::StationaryRandom
        }
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_dependence() == XDependence::None
    }

    /// False when some piece is only level-set convex; such Hamiltonians require `A = 0`.
    pub fn viscous_allowed(&self) -> bool {
        !self.pieces.iter().any(Piece::is_level_set_only)
    }

    #[inline]
    fn index(&self, p: f64) -> usize {
        self.pins.partition_point(|&q| q < p)
    }

    /// `H(x, p)`.
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        self.pieces[self.index(p)].eval(x, p)
    }

    /// Freeze every piece at `x` into `out` (cleared first).
    pub fn freeze_into(&self, x: f64, out: &mut Vec<LocalPiece>) {
        out.clear();
        out.extend(self.pieces.iter().map(|piece| piece.at(x)));
    }

    /// Evaluate `f` on the Hamiltonian frozen at `x`.
    pub fn with_local<R>(&self, x: f64, f: impl FnOnce(&LocalHamiltonian<'_>) -> R) -> R {
        let mut buf = Vec::with_capacity(self.pieces.len());
        self.freeze_into(x, &mut buf);
        f(&LocalHamiltonian {
            pieces: &buf,
            pins: &self.pins,
            pinned_values: &self.pinned_values,
        })
    }

    pub fn to_doc(&self) -> HamiltonianDoc {
        HamiltonianDoc {
            pieces: self.pieces.iter().map(Piece::to_doc).collect(),
            pins: self.pins.clone(),
            pinned_values: self.pinned_values.clone(),
            class: Some(self.class),
        }
    }

    /// Bind named media and validate. A missing `class` is fitted on default probes.
    pub fn from_doc(
        doc: &HamiltonianDoc,
        media: &BTreeMap<String, Arc<MediumSample>>,
    ) -> Result<Self> {
        let mut pieces = Vec::with_capacity(doc.pieces.len());
        for pd in &doc.pieces {
            let mut piece = Piece {
                form: pd.form,
                coeffs: pd.coeffs,
                medium: None,
            };
            if let Some(name) = &pd.medium_ref {
                let m = media
                    .get(name)
                    .ok_or_else(|| Error::UnknownMedium(name.clone()))?;
                piece.medium = Some((name.clone(), Arc::clone(m)));
            }
            pieces.push(piece);
        }
        let mut spec = build_pinned(pieces, doc.pins.clone())?;
        if !doc.pinned_values.is_empty() {
            if doc.pinned_values.len() != spec.pins.len() {
                return Err(invalid("pinned_values", "need one value per pin"));
            }
            for (i, (&given, &measured)) in doc.pinned_values.iter().zip(&spec.pinned_values).enumerate() {
                if (given - measured).abs() > PIN_TOLERANCE * (1.0 + given.abs()) {
                    return Err(Error::PinMismatch {
                        index: i,
                        pin: spec.pins[i],
                        discrepancy: given - measured,
                    });
                }
            }
            spec.pinned_values = doc.pinned_values.clone();
        }
        if let Some(class) = doc.class {
            spec = spec.with_class(class)?;
        }
        Ok(spec)
    }
}

/// Build a pinned, piecewise-convex Hamiltonian.
///
/// Pieces must agree at every pin for every probed `x`; the common value is
/// stored as the pinned value. The class is fitted on [`Probes::default_for`]
/// with the largest piece exponent.
pub fn build_pinned(pieces: Vec<Piece>, pins: Vec<f64>) -> Result<HamiltonianSpec> {
    build_pinned_with(pieces, pins, &Probes::default_for(&[]))
}

/// [`build_pinned`] with extra x-probes for the pin-agreement and shape checks.
pub fn build_pinned_with(
    pieces: Vec<Piece>,
    pins: Vec<f64>,
    probes: &Probes,
) -> Result<HamiltonianSpec> {
    if pieces.len() != pins.len() + 1 {
        return Err(invalid(
            "pieces",
            format!("need {} pieces for {} pins, got {}", pins.len() + 1, pins.len(), pieces.len()),
        ));
    }
    if pins.iter().any(|p| !p.is_finite()) || pins.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("pins", "must be finite and strictly increasing"));
    }
    for piece in &pieces {
        piece.validate()?;
    }
    let pin_probes = Probes::default_for(&pins);
    let mut xs = pin_probes.xs.clone();
    xs.extend(probes.xs.iter().copied());
    let mut pinned_values = Vec::with_capacity(pins.len());
    for (i, &pin) in pins.iter().enumerate() {
        let h = pieces[i].eval(xs[0], pin);
        let mut worst = 0.0f64;
        for &x in &xs {
            let left = pieces[i].eval(x, pin);
            let right = pieces[i + 1].eval(x, pin);
            worst = worst.max((left - h).abs()).max((right - h).abs());
        }
        if worst > PIN_TOLERANCE * (1.0 + h.abs()) {
            return Err(Error::PinMismatch {
                index: i,
                pin,
                discrepancy: worst,
            });
        }
        pinned_values.push(h);
    }
    let reach = pins.iter().fold(0.0f64, |m, p| m.max(p.abs())) + 4.0;
    check_shapes(&pieces, &pins, &xs, reach)?;
    let gamma = pieces
        .iter()
        .map(Piece::gamma)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1.0 + 1e-9);
    let provisional = ClassParams {
        gamma,
        alpha0: 1.0,
        beta0: 1.0,
    };
    let spec = HamiltonianSpec::assemble(pieces, pins, pinned_values, provisional);
    let class = fit_class(&spec, &Probes::default_for(spec.pins()), gamma)?;
    Ok(HamiltonianSpec { class, ..spec })
}

/// Convex pieces: second differences on a p-grid. Level-set convex pieces:
/// nonincreasing then nondecreasing along p on their own interval.
fn check_shapes(pieces: &[Piece], pins: &[f64], xs: &[f64], reach: f64) -> Result<()> {
    let np = 801;
    let h = 2.0 * reach / (np - 1) as f64;
    for (k, piece) in pieces.iter().enumerate() {
        let lo = if k == 0 { -reach } else { pins[k - 1] };
        let hi = if k == pins.len() { reach } else { pins[k] };
        for &x in xs.iter().step_by(4) {
            let local = piece.at(x);
            if piece.is_level_set_only() {
                let n = 400;
                let vals: Vec<f64> = (0..=n)
                    .map(|i| local.eval(lo + (hi - lo) * i as f64 / n as f64))
                    .collect();
                let mut rising = false;
                for i in 1..vals.len() {
                    let d = vals[i] - vals[i - 1];
                    if d > CONVEXITY_SLACK {
                        rising = true;
                    } else if rising && d < -CONVEXITY_SLACK {
                        return Err(Error::ConvexityViolation {
                            piece: k,
                            p: lo + (hi - lo) * i as f64 / n as f64,
                            second_difference: d,
                        });
                    }
                }
            } else {
                for i in 1..np - 1 {
                    let p = -reach + h * i as f64;
                    let d2 = local.eval(p + h) - 2.0 * local.eval(p) + local.eval(p - h);
                    if d2 < -CONVEXITY_SLACK {
                        return Err(Error::ConvexityViolation {
                            piece: k,
                            p,
                            second_difference: d2,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Signed margins of the three class inequalities on `probes`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMargins {
    pub lower_growth: f64,
    pub upper_growth: f64,
    pub x_lipschitz: f64,
    pub p_lipschitz: f64,
}

impl ClassMargins {
    pub fn worst(&self) -> f64 {
        self.lower_growth
            .min(self.upper_growth)
            .min(self.x_lipschitz)
            .min(self.p_lipschitz)
    }
}

pub fn class_margins(h: &HamiltonianSpec, class: &ClassParams, probes: &Probes) -> ClassMargins {
    let g = class.gamma;
    let table: Vec<Vec<f64>> = probes
        .xs
        .iter()
        .map(|&x| probes.ps.iter().map(|&p| h.eval(x, p)).collect())
        .collect();
    let mut m = ClassMargins {
        lower_growth: f64::INFINITY,
        upper_growth: f64::INFINITY,
        x_lipschitz: f64::INFINITY,
        p_lipschitz: f64::INFINITY,
    };
    for row in &table {
        for (j, &p) in probes.ps.iter().enumerate() {
            m.lower_growth = m.lower_growth.min(row[j] - class.alpha(p));
            m.upper_growth = m.upper_growth.min(class.beta(p) - row[j]);
        }
        for j in 1..probes.ps.len() {
            let (p, q) = (probes.ps[j - 1], probes.ps[j]);
            let bound = class.beta0 * (p.abs() + q.abs() + 1.0).powf(g - 1.0) * (p - q).abs();
            m.p_lipschitz = m.p_lipschitz.min(bound - (row[j] - row[j - 1]).abs());
        }
    }
    for a in 0..probes.xs.len() {
        for b in (a + 1)..probes.xs.len() {
            let dx = (probes.xs[a] - probes.xs[b]).abs();
            for (j, &p) in probes.ps.iter().enumerate() {
                let bound = class.beta(p) * dx;
                m.x_lipschitz = m.x_lipschitz.min(bound - (table[a][j] - table[b][j]).abs());
            }
        }
    }
    m
}

/// Report the worst violation of the class inequalities for the stored class.
pub fn validate_class(h: &HamiltonianSpec, probes: &Probes) -> VerificationReport {
    let m = class_margins(h, &h.class, probes);
    VerificationReport::from_measurement("class", (-m.worst()).max(0.0), 0.0, 0.0)
        .with_witness("lower_growth", m.lower_growth)
        .with_witness("upper_growth", m.upper_growth)
        .with_witness("x_lipschitz", m.x_lipschitz)
        .with_witness("p_lipschitz", m.p_lipschitz)
}

/// Largest `alpha0` in `(0, 1]` for which the lower growth bound holds on the probes.
pub fn max_alpha0(h: &HamiltonianSpec, gamma: f64, probes: &Probes) -> Option<f64> {
    let values: Vec<(f64, f64)> = probes
        .xs
        .iter()
        .flat_map(|&x| probes.ps.iter().map(move |&p| (p, h.eval(x, p))))
        .collect();
    let holds = |a: f64| {
        values
            .iter()
            .all(|&(p, v)| a * p.abs().powf(gamma) - 1.0 / a <= v)
    };
    if holds(1.0) {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (1e-8, 1.0);
    if !holds(lo) {
        return None;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-10 {
            break;
        }
    }
    Some(lo)
}

/// Fit `(alpha0, beta0)` for exponent `gamma`: the largest admissible `alpha0`
/// and the smallest admissible `beta0` on the probes.
pub fn fit_class(h: &HamiltonianSpec, probes: &Probes, gamma: f64) -> Result<ClassParams> {
    let alpha0 = max_alpha0(h, gamma, probes)
        .ok_or_else(|| invalid("class", "lower growth bound fails for every alpha0"))?;
    let unit = ClassParams {
        gamma,
        alpha0,
        beta0: 1.0,
    };
    // Smallest beta0 is the worst ratio measured / (bound at beta0 = 1).
    let mut beta0: f64 = 1e-6;
    for &x in &probes.xs {
        for &p in &probes.ps {
            beta0 = beta0.max(h.eval(x, p) / unit.beta(p));
        }
        for j in 1..probes.ps.len() {
            let (p, q) = (probes.ps[j - 1], probes.ps[j]);
            let bound = (p.abs() + q.abs() + 1.0).powf(gamma - 1.0) * (p - q).abs();
            beta0 = beta0.max((h.eval(x, q) - h.eval(x, p)).abs() / bound);
        }
    }
    if !h.is_x_independent() {
        for a in 0..probes.xs.len() {
            for b in (a + 1)..probes.xs.len() {
                let dx = (probes.xs[a] - probes.xs[b]).abs();
                for &p in &probes.ps {
                    let diff = (h.eval(probes.xs[a], p) - h.eval(probes.xs[b], p)).abs();
                    beta0 = beta0.max(diff / (unit.beta(p) * dx));
                }
            }
        }
    }
    ClassParams::new(gamma, alpha0, beta0 * (1.0 + 1e-9))
}

/// The two halves of a Hamiltonian split at one pin.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    /// Pieces up to the pin, the last one extended by its own formula.
    pub minus: HamiltonianSpec,
    /// Pieces beyond the pin, the first one extended by its own formula.
    pub plus: HamiltonianSpec,
    pub pin: f64,
    pub pinned_value: f64,
}

impl SplitPair {
    pub fn recomposed(&self, x: f64, p: f64) -> f64 {
        self.minus.eval(x, p).min(self.plus.eval(x, p))
    }

    /// Smallest value of `(H_- - H_+)(p - pin)` on the probes (nonnegative when ordered).
    pub fn ordering_margin(&self, probes: &Probes) -> f64 {
        let mut worst = f64::INFINITY;
        for &x in &probes.xs {
            for &p in &probes.ps {
                let d = (self.minus.eval(x, p) - self.plus.eval(x, p)) * (p - self.pin);
                worst = worst.min(d);
            }
        }
        worst
    }
}

/// Split `h` at pin `pin_index` into `H_-` (pieces `0..=k`) and `H_+`
/// (pieces `k+1..`). Each half keeps the exponent and refits its own constants.
pub fn split_at_pin(h: &HamiltonianSpec, pin_index: usize) -> Result<SplitPair> {
    if pin_index >= h.pins.len() {
        return Err(Error::NotPinned(pin_index));
    }
    let pin = h.pins[pin_index];
    let value = h.pinned_values[pin_index];
    let probes = Probes::default_for(&h.pins);
    for &x in &probes.xs {
        if (h.eval(x, pin) - value).abs() > PIN_TOLERANCE * (1.0 + value.abs()) {
            return Err(Error::NotPinned(pin_index));
        }
    }
    let gamma = h.class.gamma;
    let half = |range: std::ops::Range<usize>, pins: &[f64], values: &[f64]| -> Result<HamiltonianSpec> {
        let s = HamiltonianSpec::assemble(
            h.pieces[range].to_vec(),
            pins.to_vec(),
            values.to_vec(),
            h.class,
        );
        let class = fit_class(&s, &probes, gamma)?;
        Ok(HamiltonianSpec { class, ..s })
    };
    let minus = half(
        0..pin_index + 1,
        &h.pins[..pin_index],
        &h.pinned_values[..pin_index],
    )?;
    let plus = half(
        pin_index + 1..h.pieces.len(),
        &h.pins[pin_index + 1..],
        &h.pinned_values[pin_index + 1..],
    )?;
    Ok(SplitPair {
        minus,
        plus,
        pin,
        pinned_value: value,
    })
}

/// `H~(x, p) = H(x, p + p0)`: pins and piece centers move by `-p0`.
pub fn shift_pin(h: &HamiltonianSpec, p0: f64) -> HamiltonianSpec {
    HamiltonianSpec {
        pieces: h.pieces.iter().map(|piece| piece.shifted(p0)).collect(),
        pins: h.pins.iter().map(|p| p - p0).collect(),
        pinned_values: h.pinned_values.clone(),
        class: h.class,
    }
}
