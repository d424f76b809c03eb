#include "rdvla/metrics.hpp"

#include <sstream>

#include "rdvla/common.hpp"

namespace rdvla {

namespace {

void cell_ll(std::ostream& os, long long v) {
    if (v >= 0) os << v;
}

void cell_int(std::ostream& os, int v) {
    if (v >= 0) os << v;
}

void cell_double(std::ostream& os, double v) {
    if (v >= 0) os << v;
}

}  // namespace

const char* MetricsWriter::header() {
    return "run_id,kind,step,tier,seed,success,k_star,exec_horizon,loss,wall_ms";
}

MetricsWriter::MetricsWriter(const std::string& path, const std::string& run_id)
    : path_(path), run_id_(run_id), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("metrics: cannot open " + path);
    out_ << header() << "\n";
    out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
    out_ << run_id_ << "," << row.kind << ",";
    cell_ll(out_, row.step);
    out_ << ",";
    cell_int(out_, row.tier);
    out_ << ",";
    cell_ll(out_, row.seed);
    out_ << ",";
    cell_int(out_, row.success);
    out_ << ",";
    cell_double(out_, row.k_star);
    out_ << ",";
    cell_int(out_, row.exec_horizon);
    out_ << ",";
    cell_double(out_, row.loss);
    out_ << ",";
    cell_double(out_, row.wall_ms);
    out_ << "\n";
    out_.flush();
    if (!out_) throw IoError("metrics: write failed for " + path_);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << content;
    if (!f) throw IoError("write failed for " + path);
}

}  // namespace rdvla
