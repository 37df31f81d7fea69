#include "mfmap/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mfmap/csv.hpp"
#include "mfmap/errors.hpp"
#include "mfmap/grid_index.hpp"

namespace mfmap {

Eigen::Index MultiFidelityLocations::total() const {
    Eigen::Index t = 0;
    for (const auto& f : fidelities) t += f.rows();
    return t;
}

double MultiFidelityLocations::bbox_diameter() const {
    if (bbox_min.size() == 0) return 0.0;
    return (bbox_max - bbox_min).norm();
}

void MultiFidelityLocations::validate() const {
    if (fidelities.empty()) {
        throw DataError("locations: at least one fidelity required");
    }
    for (int r = 0; r < num_fidelities(); ++r) {
        const auto& f = fidelities[r];
        if (f.rows() == 0) {
            throw DataError("locations: fidelity " + std::to_string(r + 1) +
                            " is empty");
        }
        if (f.cols() != dim) {
            throw DataError("locations: fidelity " + std::to_string(r + 1) +
                            " has dimension " + std::to_string(f.cols()) +
                            ", expected " + std::to_string(dim));
        }
        if (!f.allFinite()) {
            throw DataError("locations: non-finite coordinate in fidelity " +
                            std::to_string(r + 1));
        }
        std::set<std::vector<double>> seen;
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            std::vector<double> key(f.row(i).begin(), f.row(i).end());
            if (!seen.insert(std::move(key)).second) {
                throw DataError("locations: duplicate location in fidelity " +
                                std::to_string(r + 1) + " at row " +
                                std::to_string(i + 1));
            }
        }
    }
}

MultiFidelityLocations make_locations(std::vector<Eigen::MatrixXd> fidelities) {
    MultiFidelityLocations locs;
    locs.fidelities = std::move(fidelities);
    locs.dim = locs.fidelities.empty()
                   ? 0
                   : static_cast<int>(locs.fidelities.front().cols());
    locs.validate();
    locs.bbox_min = locs.fidelities.front().colwise().minCoeff().transpose();
    locs.bbox_max = locs.fidelities.front().colwise().maxCoeff().transpose();
    for (const auto& f : locs.fidelities) {
        locs.bbox_min = locs.bbox_min.cwiseMin(f.colwise().minCoeff().transpose());
        locs.bbox_max = locs.bbox_max.cwiseMax(f.colwise().maxCoeff().transpose());
    }
    return locs;
}

void Ensemble::validate(const MultiFidelityLocations& locs) const {
    if (values.size() != locs.fidelities.size()) {
        throw DataError("ensemble: fidelity count mismatch");
    }
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (values[r].rows() != n) {
            throw DataError("ensemble: inconsistent replicate count in fidelity " +
                            std::to_string(r + 1));
        }
        if (values[r].cols() != locs.fidelities[r].rows()) {
            throw DataError("ensemble: fidelity " + std::to_string(r + 1) +
                            " has " + std::to_string(values[r].cols()) +
                            " columns, expected " +
                            std::to_string(locs.fidelities[r].rows()));
        }
        if (!values[r].allFinite()) {
            throw DataError("ensemble: non-finite value in fidelity " +
                            std::to_string(r + 1));
        }
    }
}

MultiFidelityLocations load_locations(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() < 2 || table.header[0] != "fidelity" ||
        table.header[1] != "x") {
        throw DataError(path + ": locations header must be fidelity,x,y[,z...]");
    }
    const int dim = static_cast<int>(table.header.size()) - 1;
    std::vector<Eigen::MatrixXd> fids;
    std::vector<std::vector<double>> current;
    std::int64_t current_fid = 0;

    auto flush = [&]() {
        if (current.empty()) return;
        Eigen::MatrixXd m(static_cast<Eigen::Index>(current.size()), dim);
        for (std::size_t i = 0; i < current.size(); ++i) {
            for (int j = 0; j < dim; ++j) {
                m(static_cast<Eigen::Index>(i), j) = current[i][static_cast<std::size_t>(j)];
            }
        }
        fids.push_back(std::move(m));
        current.clear();
    };

    for (std::size_t row = 0; row < table.rows.size(); ++row) {
        const auto& fields = table.rows[row];
        std::string ctx = path + ":" + std::to_string(row + 2);
        std::int64_t fid = parse_int(fields[0], ctx);
        if (current_fid == 0) {
            if (fid != 1) {
                throw DataError(ctx + ": fidelity ids must start at 1");
            }
            current_fid = 1;
        } else if (fid == current_fid + 1) {
            flush();
            current_fid = fid;
        } else if (fid != current_fid) {
            throw DataError(ctx + ": fidelity ids must be contiguous ascending");
        }
        std::vector<double> coords(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j) {
            double v = parse_double(fields[static_cast<std::size_t>(j) + 1], ctx);
            if (!std::isfinite(v)) {
                throw DataError(ctx + ": non-finite coordinate");
            }
            coords[static_cast<std::size_t>(j)] = v;
        }
        current.push_back(std::move(coords));
    }
    flush();
    if (fids.empty()) {
        throw DataError(path + ": no location rows");
    }
    return make_locations(std::move(fids));
}

namespace {

Eigen::MatrixXd load_one_ensemble(const std::string& path, Eigen::Index n_cols,
                                  std::vector<std::int64_t>& rep_ids) {
    CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "rep") {
        throw DataError(path + ": ensemble header must be rep,v1,...,vN");
    }
    if (static_cast<Eigen::Index>(table.header.size()) - 1 != n_cols) {
        throw DataError(path + ": has " +
                        std::to_string(table.header.size() - 1) +
                        " value columns, expected " + std::to_string(n_cols));
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(table.rows.size()), n_cols);
    std::int64_t prev = 0;
    rep_ids.clear();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        std::string ctx = path + ":" + std::to_string(i + 2);
        std::int64_t rep = parse_int(table.rows[i][0], ctx);
        if (rep < 1 || rep <= prev) {
            throw DataError(ctx +
                            ": replicate ids must be strictly increasing from 1");
        }
        prev = rep;
        rep_ids.push_back(rep);
        for (Eigen::Index j = 0; j < n_cols; ++j) {
            double v = parse_double(table.rows[i][static_cast<std::size_t>(j) + 1], ctx);
            if (!std::isfinite(v)) {
                throw DataError(ctx + ": non-finite value");
            }
            values(static_cast<Eigen::Index>(i), j) = v;
        }
    }
    return values;
}

}  // namespace

Ensemble load_ensemble(const std::vector<std::string>& paths,
                       const MultiFidelityLocations& locs) {
    if (static_cast<int>(paths.size()) != locs.num_fidelities()) {
        throw DataError("ensemble: expected " +
                        std::to_string(locs.num_fidelities()) +
                        " files, got " + std::to_string(paths.size()));
    }
    Ensemble ens;
    std::vector<std::int64_t> ref_ids;
    for (int r = 0; r < locs.num_fidelities(); ++r) {
        std::vector<std::int64_t> ids;
        ens.values.push_back(load_one_ensemble(paths[static_cast<std::size_t>(r)],
                                               locs.size(r), ids));
        if (r == 0) {
            ref_ids = ids;
        } else if (ids != ref_ids) {
            throw DataError(paths[static_cast<std::size_t>(r)] +
                            ": replicate ids differ from " + paths[0]);
        }
    }
    ens.n = ens.values.front().rows();
    ens.validate(locs);
    return ens;
}

void write_locations(const std::string& path,
                     const MultiFidelityLocations& locs) {
    std::vector<std::string> header = {"fidelity", "x"};
    const char* names[] = {"y", "z"};
    for (int j = 1; j < locs.dim; ++j) {
        header.push_back(j <= 2 ? names[j - 1] : "w" + std::to_string(j));
    }
    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < locs.num_fidelities(); ++r) {
        const auto& f = locs.fidelities[static_cast<std::size_t>(r)];
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            std::vector<std::string> row = {format_int(r + 1)};
            for (Eigen::Index j = 0; j < f.cols(); ++j) {
                row.push_back(format_double(f(i, j)));
            }
            rows.push_back(std::move(row));
        }
    }
    write_csv(path, header, rows);
}

void write_ensemble(const std::string& path, const Eigen::MatrixXd& values,
                    const std::vector<std::int64_t>& rep_ids) {
    std::vector<std::string> header = {"rep"};
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        header.push_back("v" + std::to_string(j + 1));
    }
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        std::vector<std::string> row;
        row.push_back(format_int(rep_ids.empty()
                                     ? i + 1
                                     : rep_ids[static_cast<std::size_t>(i)]));
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            row.push_back(format_double(values(i, j)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

std::pair<Ensemble, StandardizeTable> standardize(const Ensemble& ens) {
    if (ens.n < 2) {
        throw DataError("standardize: at least two replicates required");
    }
    Ensemble out;
    out.n = ens.n;
    StandardizeTable table;
    const double denom = static_cast<double>(ens.n - 1);
    for (std::size_t r = 0; r < ens.values.size(); ++r) {
        const auto& v = ens.values[r];
        Eigen::VectorXd mean = v.colwise().mean().transpose();
        Eigen::VectorXd sd(v.cols());
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            sd[j] = std::sqrt((v.col(j).array() - mean[j]).square().sum() / denom);
            if (sd[j] < 1e-12) {
                throw DataError("standardize: zero-variance column " +
                                std::to_string(j + 1) + " in fidelity " +
                                std::to_string(r + 1));
            }
        }
        out.values.push_back(((v.rowwise() - mean.transpose()).array().rowwise() /
                              sd.transpose().array())
                                 .matrix());
        table.mean.push_back(std::move(mean));
        table.sd.push_back(std::move(sd));
    }
    return {std::move(out), std::move(table)};
}

Ensemble unstandardize(const Ensemble& ens, const StandardizeTable& table) {
    Ensemble out;
    out.n = ens.n;
    for (std::size_t r = 0; r < ens.values.size(); ++r) {
        out.values.push_back(
            ((ens.values[r].array().rowwise() * table.sd[r].transpose().array())
                 .rowwise() +
             table.mean[r].transpose().array())
                .matrix());
    }
    return out;
}

std::vector<Eigen::Index> nearest_neighbors(
    const Eigen::Ref<const Eigen::RowVectorXd>& query,
    const Eigen::Ref<const Eigen::MatrixXd>& pool, Eigen::Index k) {
    GridIndex index(pool);
    return index.query(query, k);
}

}  // namespace mfmap
