#include "plq/io.hpp"

#include "plq/bench.hpp"
#include "plq/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace plq::io {

namespace fs = std::filesystem;

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

namespace {

bool parse_number(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

double number(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_null()) return kInf;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw Error(ErrorCode::ParseError, "expected a number, got " + j.dump());
}

}  // namespace

std::vector<std::vector<double>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        bool ok = true;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            double v = 0.0;
            if (!parse_number(cell, v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw Error(ErrorCode::ParseError, path.string() + ": bad row '" + line + "'");
        }
        first = false;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

Mat matrix_from_json(const json& j, const fs::path& base) {
    if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
    std::vector<std::vector<double>> rows;
    if (j.is_object() && j.contains("csv")) {
        rows = read_csv(base / j.at("csv").get<std::string>());
    } else if (j.is_array()) {
        for (const auto& r : j) {
            std::vector<double> row;
            if (r.is_array()) {
                for (const auto& v : r) row.push_back(number(v));
            } else {
                row.push_back(number(r));
            }
            rows.push_back(std::move(row));
        }
    } else {
        throw Error(ErrorCode::ParseError, "matrix must be an array, a number or {\"csv\": file}");
    }
    if (rows.empty()) return Mat(0, 0);
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw Error(ErrorCode::ParseError, "ragged matrix");
        for (std::size_t k = 0; k < rows[i].size(); ++k) out(i, k) = rows[i][k];
    }
    return out;
}

Vec vector_from_json(const json& j, const fs::path& base) {
    const Mat m = matrix_from_json(j, base);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw Error(ErrorCode::ParseError, "expected a vector");
}

QsPenalty penalty_from_json(const json& j, const fs::path& base) {
    if (j.contains("kind")) {
        CatalogueParams p;
        p.kappa = j.value("kappa", 1.0);
        p.eps = j.value("eps", 0.0);
        p.lambda = j.value("lambda", 0.0);
        QsPenalty rho = make_catalogue(parse_penalty_kind(j.at("kind").get<std::string>()), p, j.value("dim", 1));
        if (j.contains("scale")) rho = scale(rho, j.at("scale").get<double>());
        return rho;
    }
    const Vec lo = vector_from_json(j.at("lower"), base);
    const Vec hi = vector_from_json(j.at("upper"), base);
    return make_penalty(IntervalProduct(lo, hi), matrix_from_json(j.at("M"), base), vector_from_json(j.at("b"), base),
                        matrix_from_json(j.at("B"), base));
}

PlqProblem problem_from_json(const json& j, const fs::path& base) {
    try {
        if (j.contains("penalty")) return make_problem(penalty_from_json(j.at("penalty"), base));
        return assemble_problem(penalty_from_json(j.at("V"), base), penalty_from_json(j.at("W"), base),
                                matrix_from_json(j.at("H"), base), matrix_from_json(j.at("G"), base),
                                matrix_from_json(j.at("R"), base), matrix_from_json(j.at("Q"), base),
                                vector_from_json(j.at("z"), base), vector_from_json(j.at("mu"), base));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

StateSpaceModel model_from_json(const json& j, const fs::path& base) {
    try {
        if (j.contains("spline")) {
            const auto& s = j.at("spline");
            return build_spline_model(s.at("dt").get<double>(), s.at("lambda2").get<double>(),
                                      s.at("N").get<Eigen::Index>(), s.value("noninformative", false));
        }
        StateSpaceModel m;
        m.N = j.at("N").get<Eigen::Index>();
        auto blocks = [&](const char* key) {
            std::vector<Mat> out;
            for (const auto& b : j.at(key)) out.push_back(matrix_from_json(b, base));
            if (out.size() == 1) out.assign(static_cast<std::size_t>(m.N), out[0]);
            return out;
        };
        m.G = blocks("G");
        m.H = blocks("H");
        m.Q = blocks("Q");
        m.R = blocks("R");
        m.x0 = vector_from_json(j.at("x0"), base);
        m.n = m.x0.size();
        m.m = m.H.empty() ? 0 : m.H[0].rows();
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::vector<Vec> measurements_from_csv(const fs::path& path, Eigen::Index m) {
    const auto rows = read_csv(path);
    std::vector<Vec> z;
    for (const auto& r : rows) {
        const auto size = static_cast<Eigen::Index>(r.size());
        if (size != m && size != m + 1) throw Error(ErrorCode::ParseError, "measurement row has the wrong width");
        z.push_back(Eigen::Map<const Vec>(r.data() + (size - m), m));
    }
    return z;
}

std::string xhat_csv(const std::vector<Vec>& x) {
    std::ostringstream out;
    out << "k";
    const Eigen::Index n = x.empty() ? 0 : x[0].size();
    for (Eigen::Index i = 0; i < n; ++i) out << ",xhat_" << i + 1;
    out << '\n';
    for (std::size_t k = 0; k < x.size(); ++k) {
        out << k + 1;
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << fmt_double(x[k](i));
        out << '\n';
    }
    return out.str();
}

std::string vector_csv(const std::string& name, const Vec& v) {
    std::ostringstream out;
    out << "i," << name << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << i + 1 << ',' << fmt_double(v(i)) << '\n';
    return out.str();
}

}  // namespace plq::io
