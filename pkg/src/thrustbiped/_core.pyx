# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel.

C replica of the pure-Python reference in ``_engine_py`` (leg chains,
mass/bias assembly, compliant contact, Munthe-Kaas RK4).  No Python
objects are touched inside the substep loop; the equivalence tests pin
this implementation against the reference to round-off.
"""

from libc.math cimport cos, sin, sqrt, exp, isfinite

# ---------------------------------------------------------------- small math

cdef inline void vzero(double* v, int n) nogil:
    cdef int i
    for i in range(n):
        v[i] = 0.0


cdef inline void cross(const double* a, const double* b, double* out) nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline void mat3_vec(const double* A, const double* v, double* out) nogil:
    out[0] = A[0] * v[0] + A[1] * v[1] + A[2] * v[2]
    out[1] = A[3] * v[0] + A[4] * v[1] + A[5] * v[2]
    out[2] = A[6] * v[0] + A[7] * v[1] + A[8] * v[2]


cdef inline void mat3T_vec(const double* A, const double* v, double* out) nogil:
    out[0] = A[0] * v[0] + A[3] * v[1] + A[6] * v[2]
    out[1] = A[1] * v[0] + A[4] * v[1] + A[7] * v[2]
    out[2] = A[2] * v[0] + A[5] * v[1] + A[8] * v[2]


cdef inline void mat3_mat3(const double* A, const double* B, double* out) nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += A[3 * i + k] * B[3 * k + j]


cdef inline void mat3_mat3T(const double* A, const double* B, double* out) nogil:
    # out = A @ B.T
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += A[3 * i + k] * B[3 * j + k]


cdef inline void skew3(const double* w, double* out) nogil:
    out[0] = 0.0;    out[1] = -w[2];  out[2] = w[1]
    out[3] = w[2];   out[4] = 0.0;    out[5] = -w[0]
    out[6] = -w[1];  out[7] = w[0];   out[8] = 0.0


cdef void so3exp(const double* s, double* R) nogil:
    cdef double t2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2]
    cdef double t = sqrt(t2)
    cdef double a, b
    cdef double K[9]
    cdef double K2[9]
    if t < 1e-4:
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = sin(t) / t
        b = (1.0 - cos(t)) / t2
    skew3(s, K)
    mat3_mat3(K, K, K2)
    cdef int i
    for i in range(9):
        R[i] = a * K[i] + b * K2[i]
    R[0] += 1.0
    R[4] += 1.0
    R[8] += 1.0


cdef void dexpinv3(const double* s, const double* w, double* out) nogil:
    # body-frame convention: w + s x w / 2 + s x (s x w) / 12
    cdef double c1[3]
    cdef double c2[3]
    cross(s, w, c1)
    cross(s, c1, c2)
    out[0] = w[0] + 0.5 * c1[0] + c2[0] / 12.0
    out[1] = w[1] + 0.5 * c1[1] + c2[1] / 12.0
    out[2] = w[2] + 0.5 * c1[2] + c2[2] / 12.0


cdef void polar_polish(double* R) nogil:
    # two Newton-Schulz iterations: Q <- Q (3 I - Q^T Q) / 2; the input is
    # within ~1e-15 of orthonormal so this is far past converged
    cdef double G[9]
    cdef double Q[9]
    cdef int it, i, j, k
    for it in range(2):
        # G = 3 I - R^T R
        for i in range(3):
            for j in range(3):
                G[3 * i + j] = 0.0
                for k in range(3):
                    G[3 * i + j] -= R[3 * k + i] * R[3 * k + j]
        G[0] += 3.0
        G[4] += 3.0
        G[8] += 3.0
        for i in range(3):
            for j in range(3):
                Q[3 * i + j] = 0.0
                for k in range(3):
                    Q[3 * i + j] += R[3 * i + k] * G[3 * k + j]
        for i in range(9):
            R[i] = 0.5 * Q[i]


# ------------------------------------------------------------ dense helpers

cdef inline void add_JtJ(double* M, const double* J, double scale) nogil:
    # M (10x10 row-major) += scale * J^T J for J 3x10
    cdef int i, j, k
    cdef double acc
    for i in range(10):
        for j in range(i + 1):
            acc = 0.0
            for k in range(3):
                acc += J[10 * k + i] * J[10 * k + j]
            M[10 * i + j] += scale * acc
            if i != j:
                M[10 * j + i] += scale * acc


cdef inline void add_JtIJ(double* M, const double* J, const double* I3) nogil:
    # M += J^T I3 J, I3 symmetric 3x3
    cdef double T[30]
    cdef int i, j, k
    cdef double acc
    for k in range(3):
        for j in range(10):
            T[10 * k + j] = (I3[3 * k + 0] * J[0 * 10 + j]
                             + I3[3 * k + 1] * J[1 * 10 + j]
                             + I3[3 * k + 2] * J[2 * 10 + j])
    for i in range(10):
        for j in range(i + 1):
            acc = 0.0
            for k in range(3):
                acc += J[10 * k + i] * T[10 * k + j]
            M[10 * i + j] += acc
            if i != j:
                M[10 * j + i] += acc


cdef inline void add_Jtv(double* h, const double* J, const double* v, double scale) nogil:
    cdef int i
    for i in range(10):
        h[i] += scale * (J[i] * v[0] + J[10 + i] * v[1] + J[20 + i] * v[2])


cdef int cholesky10(double* A, double* L) nogil:
    # returns 0 on success, 2 on failure or condition estimate > 1e12
    cdef int i, j, k
    cdef double acc, dmin, dmax, d
    dmin = 1e300
    dmax = 0.0
    for i in range(100):
        L[i] = 0.0
    for i in range(10):
        for j in range(i + 1):
            acc = A[10 * i + j]
            for k in range(j):
                acc -= L[10 * i + k] * L[10 * j + k]
            if i == j:
                if acc <= 0.0:
                    return 2
                d = sqrt(acc)
                L[10 * i + i] = d
                if d < dmin:
                    dmin = d
                if d > dmax:
                    dmax = d
            else:
                L[10 * i + j] = acc / L[10 * j + j]
    if (dmax / dmin) * (dmax / dmin) > 1e12:
        return 2
    return 0


cdef void chol_solve10(const double* L, const double* b, double* x) nogil:
    cdef double y[10]
    cdef int i, k
    cdef double acc
    for i in range(10):
        acc = b[i]
        for k in range(i):
            acc -= L[10 * i + k] * y[k]
        y[i] = acc / L[10 * i + i]
    for i in range(9, -1, -1):
        acc = y[i]
        for k in range(i + 1, 10):
            acc -= L[10 * k + i] * x[k]
        x[i] = acc / L[10 * i + i]


# --------------------------------------------------------------- derivative

cdef int derivative(const double* mp, const double* gp, const double* x,
                    const double* uj, const double* ut, double* ydot,
                    double* power) nogil:
    """ydot (21,) = time derivative of x[9:30]; also writes the injected
    power (joints + thrusters + ground, generalized); returns status."""
    cdef const double* R = x          # 9 entries row-major
    cdef const double* pB = x + 9
    cdef double gam[2]
    cdef double phih[2]
    cdef double phik[2]
    cdef double dgam[2]
    cdef double dphih[2]
    cdef double dphik[2]
    cdef const double* omega = x + 18
    cdef const double* pbdot = x + 21

    gam[0] = x[12]; gam[1] = x[13]
    phih[0] = x[14]; phih[1] = x[15]
    phik[0] = x[16]; phik[1] = x[17]
    dgam[0] = x[24]; dgam[1] = x[25]
    dphih[0] = x[26]; dphih[1] = x[27]
    dphik[0] = x[28]; dphik[1] = x[29]

    cdef double l4a = mp[26]
    cdef double l4b = mp[27]
    cdef double m_B = mp[28]
    cdef double m_H = mp[29]
    cdef double m_K = mp[30]
    cdef double grav = mp[31]
    cdef const double* I_B = mp + 32
    cdef const double* I_H = mp + 41
    cdef const double* I_K = mp + 50
    cdef bint body_frame_thrust = mp[59] != 0.0

    cdef double M[100]
    cdef double h[10]
    cdef double rhs[10]
    cdef double L[100]
    cdef double vdot[10]
    cdef double pwr = 0.0

    vzero(M, 100)
    vzero(h, 10)

    # torso contributions
    cdef int i, j, k, side
    M[33] += m_B; M[44] += m_B; M[55] += m_B          # translation diag (3,3)..(5,5)
    for i in range(3):
        for j in range(3):
            M[10 * i + j] += I_B[3 * i + j]
    cdef double Iw[3]
    cdef double tmp3[3]
    mat3_vec(I_B, omega, Iw)
    cross(omega, Iw, tmp3)
    h[0] += tmp3[0]; h[1] += tmp3[1]; h[2] += tmp3[2]
    h[5] += m_B * grav                                 # -m g_vec, z row

    cdef double g_vec[3]
    g_vec[0] = 0.0; g_vec[1] = 0.0; g_vec[2] = -grav

    # per-side buffers
    cdef const double* l1
    cdef const double* l2
    cdef const double* l3
    cdef const double* lt
    cdef double sg, ge, dge, dph, dpk
    cdef double Rx[9]
    cdef double Ry[9]
    cdef double A1[9]
    cdef double A2[9]
    cdef double RxRyT[9]
    cdef double w1[3]
    cdef double w2[3]
    cdef double w1vp[3]
    cdef double w2vp[3]
    cdef double Rx_w[3]
    cdef double Ry_w1[3]
    cdef double pP[3]
    cdef double pH[3]
    cdef double pK[3]
    cdef double pF[3]
    cdef double vP[3]
    cdef double vH[3]
    cdef double vK[3]
    cdef double vF[3]
    cdef double aP[3]
    cdef double aH[3]
    cdef double aK[3]
    cdef double u_vec[3]
    cdef double du_vec[3]
    cdef double Sbuf[9]
    cdef double Bl1[9]
    cdef double A1l2[9]
    cdef double A2l3[9]
    cdef double A2u[9]
    cdef double Jv_H[30]
    cdef double Jv_K[30]
    cdef double Jv_F[30]
    cdef double Jw_H[30]
    cdef double Jw_K[30]
    cdef double col[3]
    cdef double col2[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cdef double Ry_ex[3]
    cdef double cg, sgn_c, ck, sk
    cdef int colg, colp
    cdef double ug[6]
    cdef double fz, vnorm, mu
    cdef double ex[3]
    cdef double ey[3]
    ex[0] = 1.0; ex[1] = 0.0; ex[2] = 0.0
    ey[0] = 0.0; ey[1] = 1.0; ey[2] = 0.0

    vzero(rhs, 10)

    for side in range(2):
        l1 = mp + 13 * side
        l2 = mp + 13 * side + 3
        l3 = mp + 13 * side + 6
        lt = mp + 13 * side + 9
        sg = mp[13 * side + 12]
        ge = sg * gam[side]
        dge = sg * dgam[side]
        dph = dphih[side]
        dpk = dphik[side]
        colg = 6 + side
        colp = 8 + side

        # elementary rotations
        cg = cos(ge); sgn_c = sin(ge)
        Rx[0] = 1.0; Rx[1] = 0.0; Rx[2] = 0.0
        Rx[3] = 0.0; Rx[4] = cg;  Rx[5] = -sgn_c
        Rx[6] = 0.0; Rx[7] = sgn_c; Rx[8] = cg
        cg = cos(phih[side]); sgn_c = sin(phih[side])
        Ry[0] = cg;  Ry[1] = 0.0; Ry[2] = sgn_c
        Ry[3] = 0.0; Ry[4] = 1.0; Ry[5] = 0.0
        Ry[6] = -sgn_c; Ry[7] = 0.0; Ry[8] = cg

        mat3_mat3(R, Rx, A1)
        mat3_mat3(A1, Ry, A2)

        # angular velocities and their velocity products (own frames)
        mat3T_vec(Rx, omega, Rx_w)
        w1[0] = Rx_w[0] + dge; w1[1] = Rx_w[1]; w1[2] = Rx_w[2]
        cross(ex, Rx_w, tmp3)
        w1vp[0] = -dge * tmp3[0]; w1vp[1] = -dge * tmp3[1]; w1vp[2] = -dge * tmp3[2]
        mat3T_vec(Ry, w1, Ry_w1)
        w2[0] = Ry_w1[0]; w2[1] = Ry_w1[1] + dph; w2[2] = Ry_w1[2]
        mat3T_vec(Ry, w1vp, t1)
        cross(ey, Ry_w1, t2)
        w2vp[0] = t1[0] - dph * t2[0]
        w2vp[1] = t1[1] - dph * t2[1]
        w2vp[2] = t1[2] - dph * t2[2]

        # positions
        mat3_vec(R, l1, t1)
        pP[0] = pB[0] + t1[0]; pP[1] = pB[1] + t1[1]; pP[2] = pB[2] + t1[2]
        mat3_vec(A1, l2, t1)
        pH[0] = pP[0] + t1[0]; pH[1] = pP[1] + t1[1]; pH[2] = pP[2] + t1[2]
        mat3_vec(A2, l3, t1)
        pK[0] = pH[0] + t1[0]; pK[1] = pH[1] + t1[1]; pK[2] = pH[2] + t1[2]
        ck = cos(phik[side]); sk = sin(phik[side])
        u_vec[0] = -l4a - l4b * sk; u_vec[1] = 0.0; u_vec[2] = -l4b * ck
        du_vec[0] = -l4b * ck; du_vec[1] = 0.0; du_vec[2] = l4b * sk
        mat3_vec(A2, u_vec, t1)
        pF[0] = pK[0] + t1[0]; pF[1] = pK[1] + t1[1]; pF[2] = pK[2] + t1[2]

        # velocities
        cross(omega, l1, t1)
        mat3_vec(R, t1, t2)
        vP[0] = pbdot[0] + t2[0]; vP[1] = pbdot[1] + t2[1]; vP[2] = pbdot[2] + t2[2]
        cross(w1, l2, t1)
        mat3_vec(A1, t1, t2)
        vH[0] = vP[0] + t2[0]; vH[1] = vP[1] + t2[1]; vH[2] = vP[2] + t2[2]
        cross(w2, l3, t1)
        mat3_vec(A2, t1, t2)
        vK[0] = vH[0] + t2[0]; vK[1] = vH[1] + t2[1]; vK[2] = vH[2] + t2[2]
        cross(w2, u_vec, t1)
        t1[0] += du_vec[0] * dpk; t1[1] += du_vec[1] * dpk; t1[2] += du_vec[2] * dpk
        mat3_vec(A2, t1, t2)
        vF[0] = vK[0] + t2[0]; vF[1] = vK[1] + t2[1]; vF[2] = vK[2] + t2[2]

        # velocity-product accelerations
        cross(omega, l1, t1)
        cross(omega, t1, t2)
        mat3_vec(R, t2, aP)
        cross(w1vp, l2, t1)
        cross(w1, l2, t2)
        cross(w1, t2, t3)
        t1[0] += t3[0]; t1[1] += t3[1]; t1[2] += t3[2]
        mat3_vec(A1, t1, t2)
        aH[0] = aP[0] + t2[0]; aH[1] = aP[1] + t2[1]; aH[2] = aP[2] + t2[2]
        cross(w2vp, l3, t1)
        cross(w2, l3, t2)
        cross(w2, t2, t3)
        t1[0] += t3[0]; t1[1] += t3[1]; t1[2] += t3[2]
        mat3_vec(A2, t1, t2)
        aK[0] = aH[0] + t2[0]; aK[1] = aH[1] + t2[1]; aK[2] = aH[2] + t2[2]

        # Jacobian building blocks
        skew3(l1, Sbuf)
        mat3_mat3(R, Sbuf, Bl1)
        skew3(l2, Sbuf)
        mat3_mat3(A1, Sbuf, A1l2)
        skew3(l3, Sbuf)
        mat3_mat3(A2, Sbuf, A2l3)
        skew3(u_vec, Sbuf)
        mat3_mat3(A2, Sbuf, A2u)
        mat3_mat3(Rx, Ry, Sbuf)          # Rx @ Ry; transpose used below
        for i in range(9):
            RxRyT[i] = Sbuf[i]
        mat3T_vec(Ry, ex, Ry_ex)

        vzero(Jv_H, 30)
        vzero(Jv_K, 30)
        vzero(Jv_F, 30)
        vzero(Jw_H, 30)
        vzero(Jw_K, 30)

        # Jv_H: omega block = -Bl1 - A1l2 @ Rx^T ; identity pb block; gamma col
        for i in range(3):
            for j in range(3):
                Jv_H[10 * i + j] = -Bl1[3 * i + j]
                for k in range(3):
                    Jv_H[10 * i + j] -= A1l2[3 * i + k] * Rx[3 * j + k]
            Jv_H[10 * i + 3 + i] = 1.0
        mat3_vec(A1l2, ex, col)
        for i in range(3):
            Jv_H[10 * i + colg] = -sg * col[i]

        # Jv_K = Jv_H - A2l3 @ (RxRy)^T | extra joint cols
        for i in range(30):
            Jv_K[i] = Jv_H[i]
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    Jv_K[10 * i + j] -= A2l3[3 * i + k] * RxRyT[3 * j + k]
        mat3_vec(A2l3, Ry_ex, col)
        mat3_vec(A2l3, ey, col2)
        for i in range(3):
            Jv_K[10 * i + colg] -= sg * col[i]
            Jv_K[10 * i + colp] = -col2[i]

        # Jv_F = Jv_K - A2u @ (RxRy)^T | extra joint cols
        for i in range(30):
            Jv_F[i] = Jv_K[i]
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    Jv_F[10 * i + j] -= A2u[3 * i + k] * RxRyT[3 * j + k]
        mat3_vec(A2u, Ry_ex, col)
        mat3_vec(A2u, ey, col2)
        for i in range(3):
            Jv_F[10 * i + colg] -= sg * col[i]
            Jv_F[10 * i + colp] -= col2[i]

        # Jw_H: omega block Rx^T, gamma col sg*ex
        for i in range(3):
            for j in range(3):
                Jw_H[10 * i + j] = Rx[3 * j + i]
        Jw_H[0 * 10 + colg] = sg

        # Jw_K: omega block (RxRy)^T, gamma col sg*Ry^T ex, phi col ey
        for i in range(3):
            for j in range(3):
                Jw_K[10 * i + j] = RxRyT[3 * j + i]
        for i in range(3):
            Jw_K[10 * i + colg] = sg * Ry_ex[i]
        Jw_K[1 * 10 + colp] = 1.0

        # mass matrix and bias
        add_JtJ(M, Jv_H, m_H)
        add_JtIJ(M, Jw_H, I_H)
        add_JtJ(M, Jv_K, m_K)
        add_JtIJ(M, Jw_K, I_K)

        t1[0] = aH[0] - g_vec[0]; t1[1] = aH[1] - g_vec[1]; t1[2] = aH[2] - g_vec[2]
        add_Jtv(h, Jv_H, t1, m_H)
        mat3_vec(I_H, w1vp, t1)
        mat3_vec(I_H, w1, t2)
        cross(w1, t2, t3)
        t1[0] += t3[0]; t1[1] += t3[1]; t1[2] += t3[2]
        add_Jtv(h, Jw_H, t1, 1.0)

        t1[0] = aK[0] - g_vec[0]; t1[1] = aK[1] - g_vec[1]; t1[2] = aK[2] - g_vec[2]
        add_Jtv(h, Jv_K, t1, m_K)
        mat3_vec(I_K, w2vp, t1)
        mat3_vec(I_K, w2, t2)
        cross(w2, t2, t3)
        t1[0] += t3[0]; t1[1] += t3[1]; t1[2] += t3[2]
        add_Jtv(h, Jw_K, t1, 1.0)

        # ground force for this foot (plane z = 0, undamped rebound, Stribeck)
        if pF[2] >= 0.0:
            ug[3 * side] = 0.0; ug[3 * side + 1] = 0.0; ug[3 * side + 2] = 0.0
        else:
            fz = -gp[0] * pF[2]
            if vF[2] <= 0.0:
                fz -= gp[1] * vF[2]
            if fz < 0.0:
                fz = 0.0
            ug[3 * side + 2] = fz
            for k in range(2):
                vnorm = vF[k]
                mu = gp[2] + (gp[3] - gp[2]) * exp(-(vnorm * vnorm) / (gp[5] * gp[5]))
                if vnorm > 0.0:
                    ug[3 * side + k] = -mu * fz - gp[4] * vnorm
                elif vnorm < 0.0:
                    ug[3 * side + k] = mu * fz - gp[4] * vnorm
                else:
                    ug[3 * side + k] = 0.0

        # thruster and ground generalized forces: rhs += Jv_T^T f_t + Jv_F^T f_g
        # Jv_T: omega block -R skew(lt), pb block I
        skew3(lt, Sbuf)
        mat3_mat3(R, Sbuf, Bl1)          # reuse Bl1 buffer for R skew(lt)
        if body_frame_thrust:
            mat3_vec(R, &ut[3 * side], t1)
        else:
            for i in range(3):
                t1[i] = ut[3 * side + i]
        for j in range(3):
            rhs[j] -= (Bl1[0 + j] * t1[0] + Bl1[3 + j] * t1[1] + Bl1[6 + j] * t1[2])
            rhs[3 + j] += t1[j]
        # thruster power: f . pdot_T with pdot_T = pbdot + R (omega x lt)
        cross(omega, lt, t2)
        mat3_vec(R, t2, t3)
        pwr += (t1[0] * (pbdot[0] + t3[0]) + t1[1] * (pbdot[1] + t3[1])
                + t1[2] * (pbdot[2] + t3[2]))
        for i in range(3):
            t2[i] = ug[3 * side + i]
        for j in range(10):
            rhs[j] += Jv_F[j] * t2[0] + Jv_F[10 + j] * t2[1] + Jv_F[20 + j] * t2[2]
        # ground power through the mass-carrying coordinates: f_g . (Jv_F v)
        # = f_g . (pdot_F - knee-rate term)
        mat3_vec(A2, du_vec, t3)
        pwr += (t2[0] * (vF[0] - t3[0] * dpk) + t2[1] * (vF[1] - t3[1] * dpk)
                + t2[2] * (vF[2] - t3[2] * dpk))

    # joint torques
    rhs[6] += uj[0]
    rhs[7] += uj[1]
    rhs[8] += uj[2]
    rhs[9] += uj[3]
    pwr += uj[0] * dgam[0] + uj[1] * dgam[1] + uj[2] * dphih[0] + uj[3] * dphih[1]
    power[0] = pwr
    for i in range(10):
        rhs[i] -= h[i]

    if cholesky10(M, L) != 0:
        return 2
    chol_solve10(L, rhs, vdot)

    for i in range(7):
        ydot[i] = x[21 + i]          # qdot
    ydot[7] = dphik[0]
    ydot[8] = dphik[1]
    for i in range(10):
        ydot[9 + i] = vdot[i]
    ydot[19] = uj[4]
    ydot[20] = uj[5]
    for i in range(21):
        if not isfinite(ydot[i]):
            return 1
    return 0


cdef int rkmk4_step(const double* mp, const double* gp, double* x,
                    const double* uj, const double* ut, double dt,
                    double* work) nogil:
    cdef double y0[21]
    cdef double ys[21]
    cdef double k1[21]
    cdef double k2[21]
    cdef double k3[21]
    cdef double k4[21]
    cdef double a1[3]
    cdef double a2[3]
    cdef double a3[3]
    cdef double a4[3]
    cdef double s[3]
    cdef double sigma[3]
    cdef double R0[9]
    cdef double Rs[9]
    cdef double E[9]
    cdef double xs[30]
    cdef double p1, p2, p3, p4
    cdef int i, st

    for i in range(9):
        R0[i] = x[i]
        xs[i] = x[i]
    for i in range(21):
        y0[i] = x[9 + i]
        xs[9 + i] = y0[i]

    # stage 1
    st = derivative(mp, gp, xs, uj, ut, k1, &p1)
    if st != 0:
        return st
    a1[0] = y0[9]; a1[1] = y0[10]; a1[2] = y0[11]

    # stage 2
    for i in range(3):
        s[i] = 0.5 * dt * a1[i]
    so3exp(s, E)
    mat3_mat3(R0, E, Rs)
    for i in range(9):
        xs[i] = Rs[i]
    for i in range(21):
        ys[i] = y0[i] + 0.5 * dt * k1[i]
        xs[9 + i] = ys[i]
    st = derivative(mp, gp, xs, uj, ut, k2, &p2)
    if st != 0:
        return st
    dexpinv3(s, &ys[9], a2)

    # stage 3
    for i in range(3):
        s[i] = 0.5 * dt * a2[i]
    so3exp(s, E)
    mat3_mat3(R0, E, Rs)
    for i in range(9):
        xs[i] = Rs[i]
    for i in range(21):
        ys[i] = y0[i] + 0.5 * dt * k2[i]
        xs[9 + i] = ys[i]
    st = derivative(mp, gp, xs, uj, ut, k3, &p3)
    if st != 0:
        return st
    dexpinv3(s, &ys[9], a3)

    # stage 4
    for i in range(3):
        s[i] = dt * a3[i]
    so3exp(s, E)
    mat3_mat3(R0, E, Rs)
    for i in range(9):
        xs[i] = Rs[i]
    for i in range(21):
        ys[i] = y0[i] + dt * k3[i]
        xs[9 + i] = ys[i]
    st = derivative(mp, gp, xs, uj, ut, k4, &p4)
    if st != 0:
        return st
    dexpinv3(s, &ys[9], a4)

    for i in range(3):
        sigma[i] = (dt / 6.0) * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
    so3exp(sigma, E)
    mat3_mat3(R0, E, Rs)
    polar_polish(Rs)
    for i in range(9):
        x[i] = Rs[i]
    for i in range(21):
        x[9 + i] = y0[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    work[0] += (dt / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
    return 0


def step_block(double[::1] morph, double[::1] ground, double[::1] x,
               double[::1] u_j, double[::1] u_t, int n_sub, double dt,
               double[::1] work_out):
    """Advance the state in place by n_sub RK4 substeps.

    ``work_out[0]`` accumulates the injected actuator/contact work over the
    block (RK4 quadrature).  Returns 0 on success, 1 on a non-finite
    derivative, 2 on a mass-matrix factorization/conditioning failure.
    """
    if morph.shape[0] != 60 or ground.shape[0] != 6 or x.shape[0] != 30:
        raise ValueError("bad array sizes for compiled kernel")
    if u_j.shape[0] != 6 or u_t.shape[0] != 6 or work_out.shape[0] != 1:
        raise ValueError("control input must have 6 entries each")
    cdef int k
    cdef int st = 0
    cdef double* xp = &x[0]
    cdef double* wp = &work_out[0]
    with nogil:
        for k in range(n_sub):
            st = rkmk4_step(&morph[0], &ground[0], xp, &u_j[0], &u_t[0], dt, wp)
            if st != 0:
                break
    return st


def derivative_once(double[::1] morph, double[::1] ground, double[::1] x,
                    double[::1] u_j, double[::1] u_t, double[::1] ydot_out):
    """Single derivative evaluation (testing hook)."""
    if ydot_out.shape[0] != 21:
        raise ValueError("ydot_out must have 21 entries")
    cdef double pwr = 0.0
    return derivative(&morph[0], &ground[0], &x[0], &u_j[0], &u_t[0],
                      &ydot_out[0], &pwr)
