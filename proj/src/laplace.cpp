#include "mgpc/laplace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include "mgpc/error.hpp"
#include "mgpc/random.hpp"

namespace mgpc {

static_assert(std::endian::native == std::endian::little, "basis cache I/O assumes a little-endian host");

FemOperators assemble_operators(const TriangleMesh& mesh, MassKind mass_kind) {
    const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
    std::vector<Eigen::Triplet<double>> a_entries, m_entries;
    a_entries.reserve(mesh.triangle_count() * 9);
    m_entries.reserve(mesh.triangle_count() * (mass_kind == MassKind::lumped ? 3 : 9));

    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const Eigen::Vector3d& p0 = mesh.vertex(tri[0]);
        const Eigen::Vector3d& p1 = mesh.vertex(tri[1]);
        const Eigen::Vector3d& p2 = mesh.vertex(tri[2]);
        const double double_area = (p1 - p0).cross(p2 - p0).norm();
        if (!(double_area > 0.0)) {
            fail(ErrorCode::geometry, "degenerate triangle " + std::to_string(t) + " during assembly");
        }
        const double area = 0.5 * double_area;
        // e[k] is the edge opposite local vertex k.
        const std::array<Eigen::Vector3d, 3> e{p2 - p1, p0 - p2, p1 - p0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                // grad N_i . grad N_j = (e_i . e_j) / (4 area^2), integrated over the triangle.
                const double value = e[i].dot(e[j]) / (4.0 * area);
                a_entries.emplace_back(static_cast<Eigen::Index>(tri[i]), static_cast<Eigen::Index>(tri[j]), value);
                if (mass_kind == MassKind::consistent) {
                    m_entries.emplace_back(static_cast<Eigen::Index>(tri[i]), static_cast<Eigen::Index>(tri[j]),
                                           area / 12.0 * (i == j ? 2.0 : 1.0));
                }
            }
            if (mass_kind == MassKind::lumped) {
                m_entries.emplace_back(static_cast<Eigen::Index>(tri[i]), static_cast<Eigen::Index>(tri[i]), area / 3.0);
            }
        }
    }
    FemOperators ops;
    ops.mass_kind = mass_kind;
    ops.stiffness.resize(n, n);
    ops.stiffness.setFromTriplets(a_entries.begin(), a_entries.end());
    ops.mass.resize(n, n);
    ops.mass.setFromTriplets(m_entries.begin(), m_entries.end());
    return ops;
}

// ---------------------------------------------------------------------------

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors, Eigen::VectorXd mass_diagonal)
    : eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)),
      mass_diagonal_(std::move(mass_diagonal)) {
    if (eigenvectors_.rows() != mass_diagonal_.size() || eigenvectors_.cols() != eigenvalues_.size()) {
        fail(ErrorCode::argument, "spectral basis dimensions are inconsistent");
    }
    total_mass_ = mass_diagonal_.sum();
    mode_mean_square_ = (eigenvectors_.array().square().colwise() * mass_diagonal_.array()).colwise().sum().transpose() /
                        total_mass_;
}

SpectralBasis SpectralBasis::truncated(std::size_t n) const {
    if (n > n_eig()) {
        fail(ErrorCode::argument, "cannot truncate a " + std::to_string(n_eig()) + "-mode basis to " +
                                      std::to_string(n) + " modes");
    }
    const auto k = static_cast<Eigen::Index>(n);
    return SpectralBasis(eigenvalues_.head(k), eigenvectors_.leftCols(k), mass_diagonal_);
}

Eigen::MatrixXd SpectralBasis::rows(std::span<const VertexId> vertices, std::size_t modes) const {
    const auto k = static_cast<Eigen::Index>(std::min(modes, n_eig()));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(vertices.size()), k);
    for (std::size_t r = 0; r < vertices.size(); ++r) {
        if (vertices[r] >= vertex_count()) {
            fail(ErrorCode::argument, "vertex " + std::to_string(vertices[r]) + " out of range");
        }
        out.row(static_cast<Eigen::Index>(r)) = eigenvectors_.row(static_cast<Eigen::Index>(vertices[r])).head(k);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void canonicalize_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index arg = 0;
        vectors.col(c).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, c) < 0.0) {
            vectors.col(c) *= -1.0;
        }
    }
}

Eigen::VectorXd lumped_diagonal(const SparseMatrix& mass) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(mass.rows());
    for (Eigen::Index k = 0; k < mass.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(mass, k); it; ++it) {
            d(it.row()) += it.value();
        }
    }
    return d;
}

bool is_diagonal(const SparseMatrix& m) {
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            if (it.row() != it.col() && it.value() != 0.0) return false;
        }
    }
    return true;
}

struct Eigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

Eigenpairs solve_dense(const FemOperators& ops, std::size_t n_eig) {
    const auto n = static_cast<lapack_int>(ops.stiffness.rows());
    const auto k = static_cast<lapack_int>(n_eig);
    Eigen::MatrixXd a = Eigen::MatrixXd(ops.stiffness);
    Eigenpairs out;
    out.values.resize(n);
    out.vectors.resize(n, k);
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));

    if (is_diagonal(ops.mass)) {
        const Eigen::VectorXd inv_sqrt = ops.mass.diagonal().cwiseSqrt().cwiseInverse();
        a = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
        const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, k, 0.0,
                                               &found, out.values.data(), out.vectors.data(), n, support.data());
        if (info != 0 || found != k) {
            fail(ErrorCode::numerical, "dense eigensolver (dsyevr) failed, info=" + std::to_string(info));
        }
        out.vectors = inv_sqrt.asDiagonal() * out.vectors;
    } else {
        Eigen::MatrixXd b = Eigen::MatrixXd(ops.mass);
        std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
        const lapack_int info =
            LAPACKE_dsygvx(LAPACK_COL_MAJOR, 1, 'V', 'I', 'L', n, a.data(), n, b.data(), n, 0.0, 0.0, 1, k, 0.0,
                           &found, out.values.data(), out.vectors.data(), n, ifail.data());
        if (info != 0 || found != k) {
            fail(ErrorCode::numerical, "dense generalized eigensolver (dsygvx) failed, info=" + std::to_string(info));
        }
    }
    out.values.conservativeResize(k);
    return out;
}

/// M-inner-product Gram-Schmidt of the columns of w against `basis` (first
/// `used` columns) and among themselves. Columns that collapse are replaced by
/// random directions. Returns the coefficients R with w_in = Q R (upper).
Eigen::MatrixXd m_orthonormalize(Eigen::MatrixXd& w, const Eigen::MatrixXd& basis, const Eigen::MatrixXd& m_basis,
                                 Eigen::Index used, const SparseMatrix& mass, Rng& rng) {
    const Eigen::Index b = w.cols();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(b, b);
    std::normal_distribution<double> normal;
    auto project_out_basis = [&](Eigen::Ref<Eigen::VectorXd> v) {
        if (used == 0) return;
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd c = m_basis.leftCols(used).transpose() * v;
            v.noalias() -= basis.leftCols(used) * c;
        }
    };
    for (Eigen::Index c = 0; c < b; ++c) {
        Eigen::VectorXd v = w.col(c);
        const double before = std::sqrt(std::max(0.0, v.dot(mass * v)));
        project_out_basis(v);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index p = 0; p < c; ++p) {
                const double coef = w.col(p).dot(mass * v);
                if (pass == 0) r(p, c) = coef;
                else r(p, c) += coef;
                v -= coef * w.col(p);
            }
        }
        double norm = std::sqrt(std::max(0.0, v.dot(mass * v)));
        if (!(norm > 1e-10 * std::max(before, 1e-300))) {
            r(c, c) = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
            project_out_basis(v);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index p = 0; p < c; ++p) v -= w.col(p).dot(mass * v) * w.col(p);
            }
            norm = std::sqrt(v.dot(mass * v));
            w.col(c) = v / norm;
        } else {
            r(c, c) = norm;
            w.col(c) = v / norm;
        }
    }
    return r;
}

Eigenpairs solve_lanczos(const FemOperators& ops, std::size_t n_eig, const EigenSolverOptions& opt) {
    const Eigen::Index n = ops.stiffness.rows();
    const auto k_total = static_cast<Eigen::Index>(n_eig);

    // Constants span the stiffness null space on a connected mesh. That mode is
    // locked up front; left in the Krylov space its 1/shift Ritz value swamps
    // the block recurrence.
    Eigen::VectorXd constant = Eigen::VectorXd::Ones(n);
    constant /= std::sqrt(constant.dot(ops.mass * constant));
    const double a_scale = Eigen::VectorXd(ops.stiffness.cwiseAbs() * Eigen::VectorXd::Ones(n)).maxCoeff();
    const Eigen::Index lk =
        (ops.stiffness * constant).cwiseAbs().maxCoeff() <= 1e-12 * a_scale * constant.cwiseAbs().maxCoeff() ? 1 : 0;
    const Eigen::Index k = k_total - lk;

    Eigenpairs out;
    out.vectors.resize(n, k_total);
    out.values.resize(k_total);
    if (lk) out.vectors.col(0) = constant;

    if (k > 0) {
        const Eigen::Index b = std::min<Eigen::Index>(std::max<std::size_t>(opt.block_size, 1), k);
        const std::size_t max_steps = opt.max_iterations ? opt.max_iterations : 10 * n_eig;
        const Eigen::Index max_dim = std::min<Eigen::Index>(n - lk, static_cast<Eigen::Index>(max_steps) * b + b);

        SparseMatrix shifted = ops.stiffness - opt.shift * ops.mass;
        Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
        if (factor.info() != Eigen::Success) {
            fail(ErrorCode::numerical, "factorization of the shifted stiffness matrix failed");
        }

        Rng rng = make_rng(opt.seed);
        std::normal_distribution<double> normal;
        // Columns [0, lk) hold the locked mode, then the M-orthonormal Krylov basis.
        Eigen::MatrixXd q(n, lk + max_dim);
        Eigen::MatrixXd mq(n, lk + max_dim);
        if (lk) {
            q.col(0) = constant;
            mq.col(0) = ops.mass * constant;
        }
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(max_dim, max_dim);
        auto reorthogonalize = [&](Eigen::MatrixXd& w, Eigen::Index used) {
            for (int pass = 0; pass < 2; ++pass) {
                w.noalias() -= q.leftCols(used) * (mq.leftCols(used).transpose() * w);
            }
        };

        Eigen::MatrixXd block(n, b);
        for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = normal(rng);
        m_orthonormalize(block, q, mq, lk, ops.mass, rng);

        Eigen::Index dim = 0;
        Eigen::MatrixXd prev_beta;  // B_{j-1}, b x b
        Eigen::Index next_check = k + b;
        Eigen::MatrixXd ritz;
        double worst = 0.0;
        bool converged = false;

        while (dim + b <= max_dim) {
            const Eigen::Index j0 = dim;
            q.middleCols(lk + j0, b) = block;
            mq.middleCols(lk + j0, b) = ops.mass * block;
            dim += b;

            Eigen::MatrixXd w = factor.solve(mq.middleCols(lk + j0, b));
            if (lk) reorthogonalize(w, lk);
            if (j0 >= b) {
                w.noalias() -= q.middleCols(lk + j0 - b, b) * prev_beta.transpose();
            }
            Eigen::MatrixXd alpha = mq.middleCols(lk + j0, b).transpose() * w;
            alpha = 0.5 * (alpha + alpha.transpose()).eval();
            w.noalias() -= q.middleCols(lk + j0, b) * alpha;
            t.block(j0, j0, b, b) = alpha;

            const bool full = dim + b > max_dim;
            if (dim >= next_check || full || dim == max_dim) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.topLeftCorner(dim, dim));
                // Largest theta <-> smallest lambda. The residual of Ritz pair y is
                // || w_orth * y_last_block ||_M with w_orth the next (unnormalized) block.
                Eigen::MatrixXd w_orth = w;
                reorthogonalize(w_orth, lk + dim);
                const Eigen::MatrixXd gram = w_orth.transpose() * (ops.mass * w_orth);
                worst = 0.0;
                converged = dim >= k;
                for (Eigen::Index i = 0; i < std::min(k, dim); ++i) {
                    const Eigen::Index col = dim - 1 - i;
                    const double th = es.eigenvalues()(col);
                    const Eigen::VectorXd tail = es.eigenvectors().col(col).tail(b);
                    const double res = std::sqrt(std::max(0.0, tail.dot(gram * tail)));
                    const double rel = res / std::abs(th);
                    worst = std::max(worst, rel);
                    if (!(rel <= opt.tolerance)) converged = false;
                }
                if (converged || full || dim == max_dim) {
                    ritz = q.middleCols(lk, dim) *
                           es.eigenvectors().rightCols(std::min(k, dim)).rowwise().reverse();
                    if (dim == max_dim) converged = dim >= k;
                    break;
                }
                next_check = dim + std::max<Eigen::Index>(b, dim / 8);
            }

            reorthogonalize(w, lk + dim);
            Eigen::MatrixXd beta = m_orthonormalize(w, q, mq, lk + dim, ops.mass, rng);
            if (dim + b <= max_dim) {
                t.block(dim, j0, b, b) = beta;
                t.block(j0, dim, b, b) = beta.transpose();
            }
            prev_beta = beta;
            block = w;
        }

        if (!converged) {
            std::ostringstream msg;
            msg << "Lanczos eigensolver did not converge within " << max_steps
                << " block steps (Krylov dimension " << dim << "); worst relative residual " << worst;
            fail(ErrorCode::numerical, msg.str());
        }
        out.vectors.rightCols(k) = ritz;
    }
    for (Eigen::Index i = 0; i < k_total; ++i) {
        auto v = out.vectors.col(i);
        const double mnorm = std::sqrt(v.dot(ops.mass * v));
        v /= mnorm;
        out.values(i) = v.dot(ops.stiffness * v);
    }
    // Ritz vectors are M-orthonormal up to reorthogonalization error.
    return out;
}

} // namespace

SpectralBasis solve_spectrum(const FemOperators& operators, std::size_t n_eig, const EigenSolverOptions& options) {
    const auto n = static_cast<std::size_t>(operators.stiffness.rows());
    if (n_eig == 0 || n_eig > n) {
        fail(ErrorCode::argument, "n_eig must be in [1, " + std::to_string(n) + "], got " + std::to_string(n_eig));
    }
    EigenMethod method = options.method;
    if (method == EigenMethod::automatic) {
        method = n <= options.dense_limit ? EigenMethod::dense : EigenMethod::lanczos;
    }
    Eigenpairs pairs = method == EigenMethod::dense ? solve_dense(operators, n_eig)
                                                    : solve_lanczos(operators, n_eig, options);

    std::vector<Eigen::Index> order(n_eig);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return pairs.values(a) < pairs.values(b); });
    Eigen::VectorXd values(static_cast<Eigen::Index>(n_eig));
    Eigen::MatrixXd vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_eig));
    const double scale = std::max(std::abs(pairs.values.maxCoeff()), 1.0);
    for (std::size_t i = 0; i < n_eig; ++i) {
        double v = pairs.values(order[i]);
        if (v < 0.0 && v > -1e-9 * scale) v = 0.0;
        values(static_cast<Eigen::Index>(i)) = v;
        vectors.col(static_cast<Eigen::Index>(i)) = pairs.vectors.col(order[i]);
    }
    canonicalize_signs(vectors);
    return SpectralBasis(std::move(values), std::move(vectors), lumped_diagonal(operators.mass));
}

double max_relative_residual(const FemOperators& operators, const SpectralBasis& basis) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(basis.n_eig()); ++i) {
        const Eigen::VectorXd v = basis.eigenvectors().col(i);
        const Eigen::VectorXd r = operators.stiffness * v - basis.eigenvalues()(i) * (operators.mass * v);
        worst = std::max(worst, r.norm() / v.norm());
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char basis_magic[] = "MGPC-EIG1";
constexpr std::size_t basis_magic_size = sizeof(basis_magic) - 1;

template <typename T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, T* data, std::size_t count, const std::filesystem::path& path) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) {
        fail(ErrorCode::format, "truncated basis cache " + path.string());
    }
}

} // namespace

void save_basis(const std::filesystem::path& path, const SpectralBasis& basis) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::io, "cannot write " + path.string());
    }
    out.write(basis_magic, basis_magic_size);
    const std::uint64_t header[2] = {basis.vertex_count(), basis.n_eig()};
    write_raw(out, header, 2);
    write_raw(out, basis.eigenvalues().data(), basis.n_eig());
    write_raw(out, basis.eigenvectors().data(), basis.n_eig() * basis.vertex_count());
    write_raw(out, basis.mass_diagonal().data(), basis.vertex_count());
    if (!out) {
        fail(ErrorCode::io, "failed writing " + path.string());
    }
}

SpectralBasis load_basis(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io, "cannot open " + path.string());
    }
    char magic[basis_magic_size];
    in.read(magic, basis_magic_size);
    if (!in || std::memcmp(magic, basis_magic, basis_magic_size) != 0) {
        fail(ErrorCode::format, path.string() + " is not an eigenbasis cache (bad magic)");
    }
    std::uint64_t header[2];
    read_raw(in, header, 2, path);
    const auto nv = static_cast<Eigen::Index>(header[0]);
    const auto ne = static_cast<Eigen::Index>(header[1]);
    {
        const auto start = in.tellg();
        in.seekg(0, std::ios::end);
        const auto expected = static_cast<std::streamoff>((ne + ne * nv + nv) * 8);
        if (in.tellg() - start != expected) {
            fail(ErrorCode::format, path.string() + ": payload size does not match header counts");
        }
        in.seekg(start);
    }
    Eigen::VectorXd values(ne);
    Eigen::MatrixXd vectors(nv, ne);
    Eigen::VectorXd mass(nv);
    read_raw(in, values.data(), static_cast<std::size_t>(ne), path);
    read_raw(in, vectors.data(), static_cast<std::size_t>(ne * nv), path);
    read_raw(in, mass.data(), static_cast<std::size_t>(nv), path);
    return SpectralBasis(std::move(values), std::move(vectors), std::move(mass));
}

} // namespace mgpc
