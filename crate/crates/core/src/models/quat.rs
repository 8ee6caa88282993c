//! Quaternion kinematics helpers shared by the rigid-body models.
//!
//! Quaternions are stored as (q0, q1, q2, q3) with scalar part first; the
//! attitude map and its derivatives below assume unit norm, which is why
//! the models renormalize after every integration step.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x4, Matrix4, Matrix4x3, Vector3, Vector4};

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix of a (unit) quaternion.
pub fn rotation(q: &Vector4<f64>) -> Matrix3<f64> {
    let (q0, q1, q2, q3) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3,
        2.0 * (q1 * q2 - q0 * q3),
        2.0 * (q1 * q3 + q0 * q2),
        2.0 * (q1 * q2 + q0 * q3),
        q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3,
        2.0 * (q2 * q3 - q0 * q1),
        2.0 * (q1 * q3 - q0 * q2),
        2.0 * (q2 * q3 + q0 * q1),
        q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3,
    )
}

/// Quaternion rate map: q_dot = 0.5 * G(q) * omega, G is 4 x 3.
pub fn omega_map(q: &Vector4<f64>) -> Matrix4x3<f64> {
    let (q0, q1, q2, q3) = (q[0], q[1], q[2], q[3]);
    Matrix4x3::new(-q1, -q2, -q3, q0, -q3, q2, q3, q0, -q1, -q2, q1, q0)
}

/// d(R_q v)/dq for fixed v, 3 x 4.
pub fn d_rot_v_dq(q: &Vector4<f64>, v: &Vector3<f64>) -> Matrix3x4<f64> {
    let q0 = q[0];
    let qv = Vector3::new(q[1], q[2], q[3]);
    let col0 = 2.0 * q0 * v + 2.0 * qv.cross(v);
    let block = 2.0 * qv * v.transpose() - 2.0 * v * qv.transpose()
        + 2.0 * qv.dot(v) * Matrix3::identity()
        - 2.0 * q0 * skew(v);
    let mut out = Matrix3x4::zeros();
    out.set_column(0, &col0);
    for j in 0..3 {
        out.set_column(j + 1, &block.column(j).into_owned());
    }
    out
}

/// d(R_q^T w)/dq for fixed w, 3 x 4. R_q^T = R_{conj(q)}.
pub fn d_rot_t_w_dq(q: &Vector4<f64>, w: &Vector3<f64>) -> Matrix3x4<f64> {
    let q0 = q[0];
    let qv = Vector3::new(q[1], q[2], q[3]);
    let col0 = 2.0 * q0 * w - 2.0 * qv.cross(w);
    let block = 2.0 * qv * w.transpose() - 2.0 * w * qv.transpose()
        + 2.0 * qv.dot(w) * Matrix3::identity()
        + 2.0 * q0 * skew(w);
    // Derivative of (q0^2 - |qv|^2) w + 2 qv (qv . w) - 2 q0 (qv x w):
    // the qv block differs from d_rot_v_dq by the sign of the skew term
    // and the transpose pairing of w and qv.
    let mut out = Matrix3x4::zeros();
    out.set_column(0, &col0);
    for j in 0..3 {
        out.set_column(j + 1, &block.column(j).into_owned());
    }
    out
}

/// d(0.5 G(q) omega)/dq for fixed omega, 4 x 4.
pub fn d_qdot_dq(omega: &Vector3<f64>) -> Matrix4<f64> {
    let (w1, w2, w3) = (omega[0], omega[1], omega[2]);
    0.5 * Matrix4::new(
        0.0, -w1, -w2, -w3, w1, 0.0, w3, -w2, w2, -w3, 0.0, w1, w3, w2, -w1, 0.0,
    )
}

/// Hessian of the scalar w . (R_q v) with respect to q, 4 x 4 (constant).
pub fn d2_w_rot_v(w: &Vector3<f64>, v: &Vector3<f64>) -> Matrix4<f64> {
    let wv = w.dot(v);
    let vxw = v.cross(w);
    let mut h = Matrix4::zeros();
    h[(0, 0)] = 2.0 * wv;
    for i in 0..3 {
        h[(0, i + 1)] = 2.0 * vxw[i];
        h[(i + 1, 0)] = 2.0 * vxw[i];
    }
    let block = 2.0 * (w * v.transpose() + v * w.transpose()) - 2.0 * wv * Matrix3::identity();
    for i in 0..3 {
        for j in 0..3 {
            h[(i + 1, j + 1)] = block[(i, j)];
        }
    }
    h
}

/// Cross second derivative of w . (0.5 G(q) omega) in (q, omega), 4 x 3.
pub fn d2_w_qdot(w: &Vector4<f64>) -> Matrix4x3<f64> {
    let (w0, w1, w2, w3) = (w[0], w[1], w[2], w[3]);
    0.5 * Matrix4x3::new(w1, w2, w3, -w0, w3, -w2, -w3, -w0, w1, w2, -w1, -w0)
}

/// Renormalize the quaternion block at `offset` in a state vector.
pub fn renormalize(x: &mut DVector<f64>, offset: usize) {
    let n = (x[offset] * x[offset]
        + x[offset + 1] * x[offset + 1]
        + x[offset + 2] * x[offset + 2]
        + x[offset + 3] * x[offset + 3])
        .sqrt();
    if n > 0.0 {
        for i in 0..4 {
            x[offset + i] /= n;
        }
    }
}

/// Rows spanning the orthogonal complement of q inside the quaternion
/// block, embedded in an (n-1) x n full-state projector together with
/// identity rows for every non-quaternion coordinate.
pub fn tangent_projector(x: &DVector<f64>, q_offset: usize) -> DMatrix<f64> {
    let n = x.len();
    let q = Vector4::new(
        x[q_offset],
        x[q_offset + 1],
        x[q_offset + 2],
        x[q_offset + 3],
    )
    .normalize();
    // Gram-Schmidt the coordinate axes against q, keeping the three
    // directions that survive.
    let mut basis: Vec<Vector4<f64>> = Vec::with_capacity(3);
    for k in 0..4 {
        let mut v = Vector4::zeros();
        v[k] = 1.0;
        v -= q * q.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
        if basis.len() == 3 {
            break;
        }
    }
    let mut p = DMatrix::zeros(n - 1, n);
    let mut row = 0;
    for i in 0..n {
        if i < q_offset || i >= q_offset + 4 {
            p[(row, i)] = 1.0;
            row += 1;
        }
    }
    for b in &basis {
        for j in 0..4 {
            p[(row, q_offset + j)] = b[j];
        }
        row += 1;
    }
    p
}
