//! Symmetric splitting coefficients for `q'' = −M(z)·q` (Runge–Kutta–Nyström
//! type, kick–drift–kick form). Only the first half of each palindrome is
//! listed; the middle entry is fixed by consistency.

/// Six-stage, fourth-order scheme: kick weights `b1..b3`, drift weights `a1..a2`.
pub const SRKN6_KICK: [f64; 3] = [0.0829844064174052, 0.396309801498368, -0.0390563049223486];
pub const SRKN6_DRIFT: [f64; 2] = [0.245298957184271, 0.604872665711080];

/// Eleven-stage, sixth-order scheme: kick weights `b1..b5`, drift weights `a1..a5`.
pub const SRKN11_KICK: [f64; 5] = [
    0.0414649985182624,
    0.198128671918067,
    -0.0400061921041533,
    0.0752539843015807,
    -0.0115113874206879,
];
pub const SRKN11_DRIFT: [f64; 5] = [
    0.123229775946271,
    0.290553797799558,
    -0.127049212625417,
    -0.246331761062075,
    0.357208872795928,
];

/// Full kick and drift sequences of the fourth-order scheme.
pub fn srkn6() -> (Vec<f64>, Vec<f64>) {
    let [b1, b2, b3] = SRKN6_KICK;
    let [a1, a2] = SRKN6_DRIFT;
    let a3 = 0.5 - (a1 + a2);
    let b4 = 1.0 - 2.0 * (b1 + b2 + b3);
    (vec![b1, b2, b3, b4, b3, b2, b1], vec![a1, a2, a3, a3, a2, a1])
}

/// Full kick and drift sequences of the sixth-order scheme.
pub fn srkn11() -> (Vec<f64>, Vec<f64>) {
    let b = SRKN11_KICK;
    let a = SRKN11_DRIFT;
    let b6 = 0.5 - b.iter().sum::<f64>();
    let a6 = 1.0 - 2.0 * a.iter().sum::<f64>();
    let mut kick: Vec<f64> = b.to_vec();
    kick.push(b6);
    kick.push(b6);
    kick.extend(b.iter().rev());
    let mut drift: Vec<f64> = a.to_vec();
    drift.push(a6);
    drift.extend(a.iter().rev());
    (kick, drift)
}
