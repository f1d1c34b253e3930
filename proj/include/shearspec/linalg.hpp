#pragma once

// Thin wrappers over the Fortran LAPACK interface (dense eig, QZ, complex LU).

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "shearspec/error.hpp"

extern "C" {
void dgeev_(const char* jobvl, const char* jobvr, const int* n, double* a, const int* lda, double* wr,
            double* wi, double* vl, const int* ldvl, double* vr, const int* ldvr, double* work,
            const int* lwork, int* info);
void zgeev_(const char* jobvl, const char* jobvr, const int* n, std::complex<double>* a, const int* lda,
            std::complex<double>* w, std::complex<double>* vl, const int* ldvl, std::complex<double>* vr,
            const int* ldvr, std::complex<double>* work, const int* lwork, double* rwork, int* info);
void zggev_(const char* jobvl, const char* jobvr, const int* n, std::complex<double>* a, const int* lda,
            std::complex<double>* b, const int* ldb, std::complex<double>* alpha, std::complex<double>* beta,
            std::complex<double>* vl, const int* ldvl, std::complex<double>* vr, const int* ldvr,
            std::complex<double>* work, const int* lwork, double* rwork, int* info);
void zgetrf_(const int* m, const int* n, std::complex<double>* a, const int* lda, int* ipiv, int* info);
void zgetrs_(const char* trans, const int* n, const int* nrhs, const std::complex<double>* a, const int* lda,
             const int* ipiv, std::complex<double>* b, const int* ldb, int* info);
}

namespace shearspec::linalg {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct EigResult {
    VectorXcd values;
    MatrixXcd vectors;  // columns; empty when not requested
};

struct GenEigResult {
    VectorXcd alpha, beta;  // lambda = alpha/beta
    MatrixXcd vectors;
};

inline void check_info(int info, const char* routine) {
    if (info != 0) throw ConvergenceError(std::string(routine) + " failed, info=" + std::to_string(info));
}

inline EigResult eig(MatrixXd A, bool vectors = true) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw DomainError("eig: matrix not square");
    VectorXd wr(n), wi(n);
    MatrixXd vr(vectors ? n : 1, vectors ? n : 1);
    int lwork = -1, info = 0, one = 1, ldvr = vectors ? n : 1;
    double q;
    const char jl = 'N', jr = vectors ? 'V' : 'N';
    dgeev_(&jl, &jr, &n, A.data(), &n, wr.data(), wi.data(), nullptr, &one, vr.data(), &ldvr, &q, &lwork, &info);
    lwork = static_cast<int>(q);
    std::vector<double> work(lwork);
    dgeev_(&jl, &jr, &n, A.data(), &n, wr.data(), wi.data(), nullptr, &one, vr.data(), &ldvr, work.data(), &lwork,
           &info);
    check_info(info, "dgeev");
    EigResult r;
    r.values.resize(n);
    for (int i = 0; i < n; ++i) r.values[i] = cplx(wr[i], wi[i]);
    if (vectors) {
        r.vectors.resize(n, n);
        for (int j = 0; j < n; ++j) {
            if (wi[j] == 0.0) {
                r.vectors.col(j) = vr.col(j).cast<cplx>();
            } else {
                // conjugate pair stored as (re, im) in columns j, j+1
                for (int i = 0; i < n; ++i) {
                    r.vectors(i, j) = cplx(vr(i, j), vr(i, j + 1));
                    r.vectors(i, j + 1) = cplx(vr(i, j), -vr(i, j + 1));
                }
                ++j;
            }
        }
    }
    return r;
}

inline EigResult eig(MatrixXcd A, bool vectors = true) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw DomainError("eig: matrix not square");
    VectorXcd w(n);
    MatrixXcd vr(vectors ? n : 1, vectors ? n : 1);
    int lwork = -1, info = 0, one = 1, ldvr = vectors ? n : 1;
    cplx q;
    std::vector<double> rwork(2 * n);
    const char jl = 'N', jr = vectors ? 'V' : 'N';
    zgeev_(&jl, &jr, &n, A.data(), &n, w.data(), nullptr, &one, vr.data(), &ldvr, &q, &lwork, rwork.data(), &info);
    lwork = static_cast<int>(q.real());
    std::vector<cplx> work(lwork);
    zgeev_(&jl, &jr, &n, A.data(), &n, w.data(), nullptr, &one, vr.data(), &ldvr, work.data(), &lwork,
           rwork.data(), &info);
    check_info(info, "zgeev");
    EigResult r{w, vectors ? vr : MatrixXcd()};
    return r;
}

// generalized problem A x = lambda B x by QZ
inline GenEigResult eig(MatrixXcd A, MatrixXcd B, bool vectors = true) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || B.rows() != n || B.cols() != n) throw DomainError("eig: pencil shape mismatch");
    GenEigResult r;
    r.alpha.resize(n);
    r.beta.resize(n);
    MatrixXcd vr(vectors ? n : 1, vectors ? n : 1);
    int lwork = -1, info = 0, one = 1, ldvr = vectors ? n : 1;
    cplx q;
    std::vector<double> rwork(8 * n);
    const char jl = 'N', jr = vectors ? 'V' : 'N';
    zggev_(&jl, &jr, &n, A.data(), &n, B.data(), &n, r.alpha.data(), r.beta.data(), nullptr, &one, vr.data(),
           &ldvr, &q, &lwork, rwork.data(), &info);
    lwork = static_cast<int>(q.real());
    std::vector<cplx> work(lwork);
    zggev_(&jl, &jr, &n, A.data(), &n, B.data(), &n, r.alpha.data(), r.beta.data(), nullptr, &one, vr.data(),
           &ldvr, work.data(), &lwork, rwork.data(), &info);
    check_info(info, "zggev");
    if (vectors) r.vectors = vr;
    return r;
}

// LU factorisation kept for repeated solves (shift-invert)
class ComplexLU {
public:
    explicit ComplexLU(MatrixXcd A) : lu_(std::move(A)), piv_(lu_.rows()) {
        const int n = static_cast<int>(lu_.rows());
        int info = 0;
        zgetrf_(&n, &n, lu_.data(), &n, piv_.data(), &info);
        if (info > 0) throw ConvergenceError("zgetrf: exactly singular matrix");
        check_info(info, "zgetrf");
    }
    VectorXcd solve(VectorXcd b) const {
        const int n = static_cast<int>(lu_.rows()), one = 1;
        int info = 0;
        const char t = 'N';
        zgetrs_(&t, &n, &one, lu_.data(), &n, piv_.data(), b.data(), &n, &info);
        check_info(info, "zgetrs");
        return b;
    }

private:
    MatrixXcd lu_;
    std::vector<int> piv_;
};

}  // namespace shearspec::linalg
