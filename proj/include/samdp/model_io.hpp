#pragma once

#include "samdp/model.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace samdp {

/**
 * Flat text model format, round-trip exact for doubles.
 *
 *   samdp 1
 *   sizes <n_states> <n_actions>
 *   gamma <g>
 *   initial_dist <n_states values>
 *   reward            # n_states lines of n_actions values
 *   transition        # n_states*n_actions lines of n_states values
 *   neighbors         # per state: <count> <indices...>
 *   prior             # per state: <count> <values...>
 *   end
 *
 * All values are printed with 17 significant digits, which reparses to the
 * identical double.
 */

namespace io_detail {

inline std::ostream& full_precision(std::ostream& os) {
    os << std::setprecision(17);
    return os;
}

inline void expect_token(std::istream& is, const std::string& want, const char* context) {
    std::string got;
    if (!(is >> got) || got != want)
        throw std::runtime_error(std::string("model_io: expected '") + want + "' in " + context +
                                 ", got '" + got + "'");
}

template <typename Scalar>
Scalar read_value(std::istream& is, const char* context) {
    Scalar v;
    if (!(is >> v)) throw std::runtime_error(std::string("model_io: malformed value in ") + context);
    return v;
}

}  // namespace io_detail

template <typename Scalar>
void write_model(std::ostream& os, const TabularSaMdp<Scalar>& mdp) {
    io_detail::full_precision(os);
    os << "samdp 1\n";
    os << "sizes " << mdp.n_states << " " << mdp.n_actions << "\n";
    os << "gamma " << mdp.gamma << "\n";
    os << "initial_dist";
    for (Index s = 0; s < mdp.n_states; ++s) os << " " << mdp.initial_dist(s);
    os << "\n";
    os << "reward\n";
    for (Index s = 0; s < mdp.n_states; ++s) {
        for (Index a = 0; a < mdp.n_actions; ++a) os << (a ? " " : "") << mdp.reward(s, a);
        os << "\n";
    }
    os << "transition\n";
    for (Index r = 0; r < mdp.transition.rows(); ++r) {
        for (Index c = 0; c < mdp.transition.cols(); ++c) os << (c ? " " : "") << mdp.transition(r, c);
        os << "\n";
    }
    os << "neighbors\n";
    for (Index s = 0; s < mdp.n_states; ++s) {
        const auto& nb = mdp.perturbation.neighbors[s];
        os << nb.size();
        for (Index v : nb) os << " " << v;
        os << "\n";
    }
    os << "prior\n";
    for (Index s = 0; s < mdp.n_states; ++s) {
        const auto& pr = mdp.perturbation.prior[s];
        os << pr.size();
        for (Index j = 0; j < pr.size(); ++j) os << " " << pr(j);
        os << "\n";
    }
    os << "end\n";
}

template <typename Scalar>
TabularSaMdp<Scalar> read_model(std::istream& is) {
    using io_detail::expect_token;
    using io_detail::read_value;
    expect_token(is, "samdp", "header");
    if (read_value<int>(is, "header version") != 1)
        throw std::runtime_error("model_io: unsupported format version");
    TabularSaMdp<Scalar> mdp;
    expect_token(is, "sizes", "sizes");
    mdp.n_states = read_value<Index>(is, "n_states");
    mdp.n_actions = read_value<Index>(is, "n_actions");
    if (mdp.n_states < 1 || mdp.n_actions < 1) throw std::runtime_error("model_io: bad sizes");
    expect_token(is, "gamma", "gamma");
    mdp.gamma = read_value<Scalar>(is, "gamma");
    expect_token(is, "initial_dist", "initial_dist");
    mdp.initial_dist.resize(mdp.n_states);
    for (Index s = 0; s < mdp.n_states; ++s) mdp.initial_dist(s) = read_value<Scalar>(is, "initial_dist");
    expect_token(is, "reward", "reward");
    mdp.reward.resize(mdp.n_states, mdp.n_actions);
    for (Index s = 0; s < mdp.n_states; ++s)
        for (Index a = 0; a < mdp.n_actions; ++a) mdp.reward(s, a) = read_value<Scalar>(is, "reward");
    expect_token(is, "transition", "transition");
    mdp.transition.resize(mdp.n_states * mdp.n_actions, mdp.n_states);
    for (Index r = 0; r < mdp.transition.rows(); ++r)
        for (Index c = 0; c < mdp.transition.cols(); ++c)
            mdp.transition(r, c) = read_value<Scalar>(is, "transition");
    expect_token(is, "neighbors", "neighbors");
    mdp.perturbation.neighbors.resize(mdp.n_states);
    for (Index s = 0; s < mdp.n_states; ++s) {
        const Index m = read_value<Index>(is, "neighbor count");
        if (m < 1) throw std::runtime_error("model_io: empty neighbor list");
        mdp.perturbation.neighbors[s].resize(m);
        for (Index j = 0; j < m; ++j)
            mdp.perturbation.neighbors[s][j] = read_value<Index>(is, "neighbor index");
    }
    expect_token(is, "prior", "prior");
    mdp.perturbation.prior.resize(mdp.n_states);
    for (Index s = 0; s < mdp.n_states; ++s) {
        const Index m = read_value<Index>(is, "prior count");
        mdp.perturbation.prior[s].resize(m);
        for (Index j = 0; j < m; ++j) mdp.perturbation.prior[s](j) = read_value<Scalar>(is, "prior");
    }
    expect_token(is, "end", "trailer");
    return mdp;
}

/// Dense matrix block with a one-word tag; shared by policy/value files.
template <typename Scalar>
void write_matrix(std::ostream& os, const std::string& tag, const MatrixX<Scalar>& m) {
    io_detail::full_precision(os);
    os << tag << " " << m.rows() << " " << m.cols() << "\n";
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
        os << "\n";
    }
}

template <typename Scalar>
MatrixX<Scalar> read_matrix(std::istream& is, const std::string& tag) {
    io_detail::expect_token(is, tag, tag.c_str());
    const Index rows = io_detail::read_value<Index>(is, "rows");
    const Index cols = io_detail::read_value<Index>(is, "cols");
    MatrixX<Scalar> m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = io_detail::read_value<Scalar>(is, tag.c_str());
    return m;
}

template <typename Scalar>
void write_rows_over_neighbors(std::ostream& os, const std::string& tag,
                               const RowsOverNeighbors<Scalar>& rows) {
    io_detail::full_precision(os);
    os << tag << " " << rows.size() << "\n";
    for (const auto& row : rows) {
        os << row.size();
        for (Index j = 0; j < row.size(); ++j) os << " " << row(j);
        os << "\n";
    }
}

template <typename Scalar>
RowsOverNeighbors<Scalar> read_rows_over_neighbors(std::istream& is, const std::string& tag) {
    io_detail::expect_token(is, tag, tag.c_str());
    const Index n = io_detail::read_value<Index>(is, "row count");
    RowsOverNeighbors<Scalar> rows(n);
    for (Index s = 0; s < n; ++s) {
        const Index m = io_detail::read_value<Index>(is, "row size");
        rows[s].resize(m);
        for (Index j = 0; j < m; ++j) rows[s](j) = io_detail::read_value<Scalar>(is, tag.c_str());
    }
    return rows;
}

template <typename Scalar>
void save_model(const std::string& path, const TabularSaMdp<Scalar>& mdp) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("model_io: cannot open for writing: " + path);
    write_model(os, mdp);
}

template <typename Scalar = double>
TabularSaMdp<Scalar> load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("model_io: cannot open for reading: " + path);
    return read_model<Scalar>(is);
}

}  // namespace samdp
