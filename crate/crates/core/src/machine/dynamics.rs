use serde::{Deserialize, Serialize};

use super::frame::{park, wrap_angle, Frame, FrameVector};
use super::params::MachineParams;

/// Rotor-frame flux linkage `(L_d i_d + lambda_pm, L_q i_q)`.
///
/// # Panics
/// If `i` is not in the rotor frame.
pub fn flux_linkage_rotor(i: FrameVector, params: &MachineParams) -> FrameVector {
    assert_eq!(i.frame, Frame::Rotor, "flux_linkage_rotor expects rotor-frame current");
    FrameVector::rotor(params.l_d * i.x1 + params.lambda_pm, params.l_q * i.x2)
}

/// Stationary-frame inductance matrix
/// `[[SL + DL cos 2t, DL sin 2t], [DL sin 2t, SL - DL cos 2t]]`.
pub fn inductance_matrix(theta: f64, params: &MachineParams) -> [[f64; 2]; 2] {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let sl = params.sum_l();
    let dl = params.delta_l();
    [[sl + dl * c2, dl * s2], [dl * s2, sl - dl * c2]]
}

/// Stationary-frame flux linkage at rotor angle `theta`:
/// `L(theta) i + lambda_pm (cos theta, sin theta)`.
///
/// # Panics
/// If `i` is not in the stationary frame.
pub fn flux_linkage_stationary(theta: f64, i: FrameVector, params: &MachineParams) -> FrameVector {
    assert_eq!(
        i.frame,
        Frame::Stationary,
        "flux_linkage_stationary expects stationary-frame current"
    );
    let l = inductance_matrix(theta, params);
    let (s, c) = theta.sin_cos();
    FrameVector::stationary(
        l[0][0] * i.x1 + l[0][1] * i.x2 + params.lambda_pm * c,
        l[1][0] * i.x1 + l[1][1] * i.x2 + params.lambda_pm * s,
    )
}

/// `(3/2)(poles/2)(lambda_alpha i_beta - lambda_beta i_alpha)`.
pub fn electromagnetic_torque(lambda: FrameVector, i: FrameVector, poles: u32) -> f64 {
    1.5 * (poles as f64 / 2.0) * lambda.cross(&i)
}

/// Electrical state of the machine. `lambda` and `i` always satisfy the
/// stationary flux/current relation at `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectroMechState {
    pub i: FrameVector,
    pub lambda: FrameVector,
    /// Electrical rotor angle, `[0, 2pi)`.
    pub theta: f64,
    /// Electrical rotor speed (rad/s).
    pub omega_r: f64,
}

impl ElectroMechState {
    /// State with the given stationary current; flux follows from it.
    pub fn from_current(i: FrameVector, theta: f64, omega_r: f64, params: &MachineParams) -> Self {
        let theta = wrap_angle(theta);
        ElectroMechState {
            i,
            lambda: flux_linkage_stationary(theta, i, params),
            theta,
            omega_r,
        }
    }

    /// Rotor-frame current.
    pub fn i_dq(&self) -> FrameVector {
        park(self.theta, self.i)
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.lambda.is_finite() && self.theta.is_finite() && self.omega_r.is_finite()
    }

    /// Residual of the flux/current relation, `|lambda - L(theta) i - psi_pm|`.
    pub fn consistency_residual(&self, params: &MachineParams) -> f64 {
        (self.lambda - flux_linkage_stationary(self.theta, self.i, params)).magnitude()
    }
}

/// Advance the electrical state by `dt` under terminal voltage `v`.
///
/// Flux is integrated from `v - R_s i`, with the resistive drop taken as the
/// trapezoidal mean of the start and end currents; the end current is solved
/// algebraically from the end flux at the advanced angle. Speed is held.
///
/// # Panics
/// If `v` is not stationary-frame or `dt <= 0`.
pub fn step_electrical(
    state: &ElectroMechState,
    v: FrameVector,
    dt: f64,
    params: &MachineParams,
) -> ElectroMechState {
    assert_eq!(v.frame, Frame::Stationary, "terminal voltage must be stationary-frame");
    assert!(dt > 0.0, "dt must be positive");
    let theta = wrap_angle(state.theta + state.omega_r * dt);
    let a = 0.5 * params.r_s * dt;
    let (s, c) = theta.sin_cos();
    let psi = FrameVector::stationary(params.lambda_pm * c, params.lambda_pm * s);

    // (L(theta') + a I) i' = lambda + v dt - a i - psi'
    let rhs = state.lambda + v * dt - state.i * a - psi;
    let l = inductance_matrix(theta, params);
    let m = [[l[0][0] + a, l[0][1]], [l[1][0], l[1][1] + a]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    debug_assert!(det > 0.0, "inductance matrix lost positive definiteness");
    let i_next = FrameVector::stationary(
        (m[1][1] * rhs.x1 - m[0][1] * rhs.x2) / det,
        (m[0][0] * rhs.x2 - m[1][0] * rhs.x1) / det,
    );
    let lambda = FrameVector::stationary(
        l[0][0] * i_next.x1 + l[0][1] * i_next.x2 + psi.x1,
        l[1][0] * i_next.x1 + l[1][1] * i_next.x2 + psi.x2,
    );
    ElectroMechState {
        i: i_next,
        lambda,
        theta,
        omega_r: state.omega_r,
    }
}

/// Rigid-body speed update. Returns the new electrical speed.
pub fn step_mechanical(omega_r: f64, t_em: f64, t_load: f64, inertia: f64, poles: u32, dt: f64) -> f64 {
    debug_assert!(dt > 0.0 && inertia > 0.0);
    omega_r + (poles as f64 / 2.0) * (t_em - t_load) / inertia * dt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> MachineParams {
        MachineParams::default()
    }

    #[test]
    fn rotor_flux_examples() {
        let p = p();
        let z = flux_linkage_rotor(FrameVector::rotor(0.0, 0.0), &p);
        assert_eq!((z.x1, z.x2), (p.lambda_pm, 0.0));
        let f = flux_linkage_rotor(FrameVector::rotor(1.0, 1.0), &p);
        assert!((f.x1 - (p.lambda_pm + 0.01441)).abs() < 1e-12);
        assert!((f.x2 - 0.02792).abs() < 1e-12);
    }

    #[test]
    fn stationary_flux_examples() {
        let p = p();
        let f = flux_linkage_stationary(0.0, FrameVector::stationary(2.0, 0.0), &p);
        assert!((f.x1 - (p.l_d * 2.0 + p.lambda_pm)).abs() < 1e-14 && f.x2.abs() < 1e-14);
        let th = 1.1;
        let f0 = flux_linkage_stationary(th, FrameVector::zero(Frame::Stationary), &p);
        assert!((f0.x1 - p.lambda_pm * th.cos()).abs() < 1e-15);
        assert!((f0.x2 - p.lambda_pm * th.sin()).abs() < 1e-15);
    }

    #[test]
    fn torque_examples() {
        let t = electromagnetic_torque(FrameVector::stationary(1.0, 0.0), FrameVector::stationary(0.0, 1.0), 4);
        assert!((t - 3.0).abs() < 1e-15);
        let par = electromagnetic_torque(FrameVector::stationary(0.3, 0.4), FrameVector::stationary(0.6, 0.8), 4);
        assert!(par.abs() < 1e-15);
        let a = FrameVector::stationary(0.2, -0.7);
        let b = FrameVector::stationary(1.3, 0.4);
        assert_eq!(electromagnetic_torque(a, b, 6), -electromagnetic_torque(b, a, 6));
    }

    #[test]
    fn resistive_equilibrium_keeps_flux() {
        let p = p();
        let i = FrameVector::stationary(1.5, -0.4);
        let s0 = ElectroMechState::from_current(i, 0.7, 0.0, &p);
        let mut s = s0;
        for _ in 0..1000 {
            s = step_electrical(&s, i * p.r_s, 1e-5, &p);
        }
        assert!((s.lambda - s0.lambda).magnitude() < 1e-12);
        assert!((s.i - i).magnitude() < 1e-12);
    }

    #[test]
    fn zero_voltage_dissipates_magnetic_energy() {
        let p = p();
        let mut s = ElectroMechState::from_current(FrameVector::stationary(3.0, 2.0), 0.4, 0.0, &p);
        let energy = |s: &ElectroMechState| {
            let dl = s.lambda - flux_linkage_stationary(s.theta, FrameVector::zero(Frame::Stationary), &p);
            0.5 * dl.dot(&s.i)
        };
        let mut prev = energy(&s);
        for _ in 0..2000 {
            s = step_electrical(&s, FrameVector::zero(Frame::Stationary), 2e-5, &p);
            let e = energy(&s);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn mechanical_examples() {
        assert_eq!(step_mechanical(10.0, 2.0, 2.0, 0.005, 4, 1e-3), 10.0);
        let w = step_mechanical(0.0, 1.0, 0.0, 0.005, 4, 1e-3);
        // 0.2 rad/s mechanical is 0.4 rad/s electrical for 4 poles
        assert!((w / 2.0 - 0.2).abs() < 1e-12);
        let mut w = 0.0;
        let mut ws = vec![];
        for _ in 0..5 {
            w = step_mechanical(w, 1.5, 0.5, 0.01, 2, 1e-3);
            ws.push(w);
        }
        for k in 1..5 {
            assert!(((ws[k] - ws[k - 1]) - ws[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn state_stays_consistent_while_rotating() {
        let p = p();
        let mut s = ElectroMechState::from_current(FrameVector::stationary(1.0, 0.5), 0.0, 250.0, &p);
        for k in 0..5000 {
            let v = FrameVector::polar(80.0, 0.01 * k as f64, Frame::Stationary);
            s = step_electrical(&s, v, 1e-5, &p);
            assert!(s.consistency_residual(&p) < 1e-12);
        }
    }
}
