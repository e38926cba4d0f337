#include "tdfreq/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tdfreq::io {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json matrix_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json maybe_inf(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double inf_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index n, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        throw std::invalid_argument(std::string(name) + " must have " + std::to_string(n) + " rows");
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = j[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw std::invalid_argument(std::string(name) + " row " + std::to_string(i) + " must have " +
                                        std::to_string(n) + " entries");
        for (Eigen::Index k = 0; k < n; ++k) M(i, k) = row[k].get<double>();
    }
    return M;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index n, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        throw std::invalid_argument(std::string(name) + " must have " + std::to_string(n) + " entries");
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j[i].get<double>();
    return v;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
}

template <class F>
auto with_json_errors(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("unexpected JSON content: ") + e.what());
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double to_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || (*end != '\0' && *end != '\r'))
        throw std::invalid_argument("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    return v;
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_timeseries_csv(std::ostream& os, const TimeSeries& ts) {
    os << "k,u,y\n";
    for (Eigen::Index k = 0; k < ts.u.size(); ++k) os << k << ',' << fmt(ts.u(k)) << ',' << fmt(ts.y(k)) << '\n';
}

void write_timeseries_csv(const fs::path& path, const TimeSeries& ts) {
    std::ostringstream os;
    write_timeseries_csv(os, ts);
    write_file(path, os.str());
}

TimeSeries read_timeseries_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty trajectory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "k,u,y") throw std::invalid_argument("trajectory header must be 'k,u,y', got '" + line + "'");
    std::vector<double> u, y;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (cells.size() != 3)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 3 columns");
        auto k = static_cast<std::size_t>(to_double(cells[0], lineno));
        if (k != u.size()) throw std::invalid_argument("line " + std::to_string(lineno) + ": sample index out of order");
        u.push_back(to_double(cells[1], lineno));
        y.push_back(to_double(cells[2], lineno));
    }
    return TimeSeries(Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size())),
                      Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}

TimeSeries read_timeseries_csv(const fs::path& path) {
    std::istringstream is(read_file(path));
    return read_timeseries_csv(is);
}

std::string system_to_json(const StateSpaceSystem& sys) {
    json j;
    j["n"] = sys.order();
    j["A"] = matrix_json(sys.A());
    j["b"] = vector_json(sys.b());
    j["c"] = vector_json(sys.c());
    return j.dump() + "\n";
}

StateSpaceSystem system_from_json(const std::string& text) {
    json j = parse(text);
    return with_json_errors([&] {
        Eigen::Index n = j.at("n").get<Eigen::Index>();
        if (n < 0) throw std::invalid_argument("system order must be nonnegative");
        return StateSpaceSystem(matrix_from(j.at("A"), n, "A"), vector_from(j.at("b"), n, "b"),
                                vector_from(j.at("c"), n, "c"));
    });
}

void write_system(const fs::path& path, const StateSpaceSystem& sys) { write_file(path, system_to_json(sys)); }

StateSpaceSystem read_system(const fs::path& path) { return system_from_json(read_file(path)); }

std::string recovery_to_json(const std::vector<RecoveryResult>& results) {
    json arr = json::array();
    for (const auto& r : results) {
        json e;
        e["omega"] = std::arg(r.sigma);
        e["sigma_re"] = r.sigma.real();
        e["sigma_im"] = r.sigma.imag();
        e["M0_re"] = r.M0.real();
        e["M0_im"] = r.M0.imag();
        e["M1_re"] = r.M1 ? json(r.M1->real()) : json(nullptr);
        e["M1_im"] = r.M1 ? json(r.M1->imag()) : json(nullptr);
        e["sW0"] = maybe_inf(r.sW0);
        e["sW1"] = r.sW1 ? maybe_inf(*r.sW1) : json(nullptr);
        e["n_used"] = r.n_used;
        e["informative"] = r.informative;
        e["deriv_informative"] = r.deriv_informative;
        e["sW0_normalized"] = r.sW0_normalized;
        e["sW1_normalized"] = r.sW1_normalized;
        e["kept"] = r.kept;
        e["kept_deriv"] = r.kept_deriv;
        arr.push_back(std::move(e));
    }
    return arr.dump(1) + "\n";
}

std::vector<RecoveryResult> recovery_from_json(const std::string& text) {
    json arr = parse(text);
    return with_json_errors([&] {
        if (!arr.is_array()) throw std::invalid_argument("recovery file must hold a JSON array");
        std::vector<RecoveryResult> out;
        for (const auto& e : arr) {
            RecoveryResult r;
            r.sigma = {e.at("sigma_re").get<double>(), e.at("sigma_im").get<double>()};
            r.M0 = {e.at("M0_re").get<double>(), e.at("M0_im").get<double>()};
            if (!e.at("M1_re").is_null()) r.M1 = cplx(e.at("M1_re").get<double>(), e.at("M1_im").get<double>());
            r.sW0 = inf_from(e.at("sW0"));
            if (r.M1 || !e.at("sW1").is_null()) r.sW1 = inf_from(e.at("sW1"));
            r.sW0_normalized = e.value("sW0_normalized", true);
            r.sW1_normalized = e.value("sW1_normalized", true);
            r.n_used = e.at("n_used").get<Eigen::Index>();
            r.informative = e.at("informative").get<bool>();
            r.deriv_informative = e.value("deriv_informative", false);
            r.kept = e.value("kept", std::vector<Eigen::Index>{});
            r.kept_deriv = e.value("kept_deriv", std::vector<Eigen::Index>{});
            out.push_back(std::move(r));
        }
        return out;
    });
}

void write_recovery_csv(std::ostream& os, const std::vector<RecoveryResult>& results) {
    os << "omega,sigma_re,sigma_im,M0_re,M0_im,M1_re,M1_im,sW0,sW1,n_used,informative\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : results) {
        cplx m1 = r.M1 ? *r.M1 : cplx(nan, nan);
        double s1 = r.sW1 ? *r.sW1 : nan;
        os << fmt(std::arg(r.sigma)) << ',' << fmt(r.sigma.real()) << ',' << fmt(r.sigma.imag()) << ','
           << fmt(r.M0.real()) << ',' << fmt(r.M0.imag()) << ',' << fmt(m1.real()) << ',' << fmt(m1.imag()) << ','
           << fmt(r.sW0) << ',' << fmt(s1) << ',' << r.n_used << ',' << (r.informative ? 1 : 0) << '\n';
    }
}

void write_recovery(const fs::path& json_path, const fs::path& csv_path, const std::vector<RecoveryResult>& results) {
    write_file(json_path, recovery_to_json(results));
    std::ostringstream os;
    write_recovery_csv(os, results);
    write_file(csv_path, os.str());
}

std::vector<RecoveryResult> read_recovery(const fs::path& json_path) {
    return recovery_from_json(read_file(json_path));
}

std::string rom_to_json(const DescriptorROM& rom) {
    json j;
    j["r"] = rom.order();
    j["E"] = matrix_json(rom.E);
    j["A"] = matrix_json(rom.A);
    j["b"] = vector_json(rom.b);
    j["c"] = vector_json(rom.c);
    return j.dump() + "\n";
}

std::string rom_to_json(const VectorFitResult& vf) {
    DescriptorROM rom = vf.descriptor();
    json j = json::parse(rom_to_json(rom));
    json poles = json::array(), residues = json::array();
    for (std::size_t k = 0; k < vf.poles.size(); ++k) {
        poles.push_back(cplx_json(vf.poles[k]));
        residues.push_back(cplx_json(vf.residues[k]));
    }
    j["poles"] = poles;
    j["residues"] = residues;
    j["d"] = vf.d;
    return j.dump() + "\n";
}

DescriptorROM rom_from_json(const std::string& text) {
    json j = parse(text);
    return with_json_errors([&] {
        Eigen::Index r = j.at("r").get<Eigen::Index>();
        if (r < 0) throw std::invalid_argument("ROM order must be nonnegative");
        DescriptorROM rom{matrix_from(j.at("E"), r, "E"), matrix_from(j.at("A"), r, "A"), vector_from(j.at("b"), r, "b"),
                          vector_from(j.at("c"), r, "c")};
        return rom;
    });
}

void write_rom(const fs::path& path, const std::string& json_text) { write_file(path, json_text); }

DescriptorROM read_rom(const fs::path& path) { return rom_from_json(read_file(path)); }

void write_sweep_csv(std::ostream& os, const FrequencySweep& s) {
    os << "omega,abs,re,im\n";
    for (std::size_t i = 0; i < s.omegas.size(); ++i)
        os << fmt(s.omegas[i]) << ',' << fmt(std::abs(s.values[i])) << ',' << fmt(s.values[i].real()) << ','
           << fmt(s.values[i].imag()) << '\n';
}

void write_sweep_csv(const fs::path& path, const FrequencySweep& s) {
    std::ostringstream os;
    write_sweep_csv(os, s);
    write_file(path, os.str());
}

}  // namespace tdfreq::io
