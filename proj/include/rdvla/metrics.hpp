#pragma once

#include <fstream>
#include <string>

namespace rdvla {

// One row of the run metrics CSV. Negative sentinels render as empty cells.
struct MetricsRow {
    std::string kind;  // train | episode | decision
    long long step = -1;
    int tier = -1;
    long long seed = -1;
    int success = -1;
    double k_star = -1;
    int exec_horizon = -1;
    double loss = -1;
    double wall_ms = -1;
};

// Append-only CSV with a fixed header, flushed after every row so a crash
// loses at most the last one.
class MetricsWriter {
  public:
    MetricsWriter(const std::string& path, const std::string& run_id);
    void write(const MetricsRow& row);
    const std::string& path() const { return path_; }

    static const char* header();

  private:
    std::string path_;
    std::string run_id_;
    std::ofstream out_;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace rdvla
