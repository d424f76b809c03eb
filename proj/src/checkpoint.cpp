#include "rdvla/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>

namespace rdvla {

namespace {

constexpr uint32_t kMagic = 0x43564452;  // "RDVC"
constexpr uint32_t kVersion = 1;

class Writer {
  public:
    template <typename T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void put_string(const std::string& s) {
        put<uint32_t>(static_cast<uint32_t>(s.size()));
        put_bytes(s.data(), s.size());
    }
    const std::vector<char>& bytes() const { return buf_; }

  private:
    std::vector<char> buf_;
};

class Reader {
  public:
    Reader(const char* p, std::size_t n) : p_(p), end_(p + n) {}
    template <typename T>
    T get() {
        T v{};
        need(sizeof(T));
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    std::string get_string() {
        const uint32_t n = get<uint32_t>();
        need(n);
        std::string s(p_, p_ + n);
        p_ += n;
        return s;
    }
    void get_bytes(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, p_, n);
        p_ += n;
    }
    bool done() const { return p_ == end_; }

  private:
    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end_ - p_) < n) {
            throw IntegrityError("checkpoint: truncated section payload");
        }
    }
    const char* p_;
    const char* end_;
};

uint32_t crc_of(const std::vector<char>& payload) {
    return static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                static_cast<uInt>(payload.size())));
}

void append_section(Writer& out, const std::string& name, const Writer& payload) {
    out.put_string(name);
    out.put<uint64_t>(payload.bytes().size());
    out.put<uint32_t>(crc_of(payload.bytes()));
    out.put_bytes(payload.bytes().data(), payload.bytes().size());
}

}  // namespace

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const Model& model,
                     const AdamWState& opt, const Rng& rng, long long train_step) {
    Writer out;
    out.put<uint32_t>(kMagic);
    out.put<uint32_t>(kVersion);
    out.put<uint32_t>(static_cast<uint32_t>(sizeof(real_t)));
    out.put<uint32_t>(5);  // section count

    Writer cfg_w;
    const std::string cfg_text = cfg.dump();
    cfg_w.put_bytes(cfg_text.data(), cfg_text.size());
    append_section(out, "config", cfg_w);

    Writer par_w;
    par_w.put<uint32_t>(static_cast<uint32_t>(model.params.items().size()));
    for (const auto& [name, t] : model.params.items()) {
        par_w.put_string(name);
        par_w.put<uint32_t>(static_cast<uint32_t>(t.rows()));
        par_w.put<uint32_t>(static_cast<uint32_t>(t.cols()));
        par_w.put_bytes(t.data(), t.numel() * sizeof(real_t));
    }
    append_section(out, "params", par_w);

    Writer opt_w;
    opt_w.put<int64_t>(opt.t);
    opt_w.put<double>(opt.beta1);
    opt_w.put<double>(opt.beta2);
    opt_w.put<double>(opt.eps);
    opt_w.put<uint32_t>(static_cast<uint32_t>(opt.m.size()));
    for (std::size_t i = 0; i < opt.m.size(); ++i) {
        opt_w.put<uint64_t>(opt.m[i].size());
        opt_w.put_bytes(opt.m[i].data(), opt.m[i].size() * sizeof(real_t));
        opt_w.put_bytes(opt.v[i].data(), opt.v[i].size() * sizeof(real_t));
    }
    append_section(out, "opt", opt_w);

    Writer rng_w;
    const Rng::State st = rng.state();
    for (uint64_t w : st.s) rng_w.put<uint64_t>(w);
    rng_w.put<uint8_t>(st.has_spare ? 1 : 0);
    rng_w.put<double>(st.spare);
    append_section(out, "rng", rng_w);

    Writer meta_w;
    meta_w.put<int64_t>(train_step);
    append_section(out, "meta", meta_w);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f.write(out.bytes().data(), static_cast<std::streamsize>(out.bytes().size()));
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());

    Reader top(bytes.data(), bytes.size());
    if (top.get<uint32_t>() != kMagic) throw IntegrityError("checkpoint: bad magic in " + path);
    const uint32_t version = top.get<uint32_t>();
    if (version != kVersion) {
        throw IntegrityError("checkpoint: incompatible format version " +
                             std::to_string(version) + " (expected " + std::to_string(kVersion) +
                             ")");
    }
    const uint32_t scalar = top.get<uint32_t>();
    if (scalar != sizeof(real_t)) {
        throw IntegrityError("checkpoint: scalar width " + std::to_string(scalar) +
                             " does not match this build (" + std::to_string(sizeof(real_t)) +
                             ")");
    }
    const uint32_t nsec = top.get<uint32_t>();
    std::map<std::string, std::vector<char>> sections;
    for (uint32_t i = 0; i < nsec; ++i) {
        const std::string name = top.get_string();
        const uint64_t len = top.get<uint64_t>();
        const uint32_t crc = top.get<uint32_t>();
        std::vector<char> payload(len);
        top.get_bytes(payload.data(), len);
        if (crc_of(payload) != crc) {
            throw IntegrityError("checkpoint: checksum mismatch in section '" + name + "'");
        }
        sections.emplace(name, std::move(payload));
    }
    auto section = [&](const char* name) -> const std::vector<char>& {
        auto it = sections.find(name);
        if (it == sections.end()) {
            throw IntegrityError("checkpoint: missing section '" + std::string(name) + "'");
        }
        return it->second;
    };

    LoadedCheckpoint out;
    {
        const auto& p = section("config");
        out.cfg = parse_config_text(std::string(p.data(), p.size()));
        out.cfg.validate();
    }
    {
        Rng init_rng(0);  // param values are overwritten below
        out.model = Model::build(out.cfg.encoder, out.cfg.head, init_rng);
        const auto& p = section("params");
        Reader r(p.data(), p.size());
        const uint32_t count = r.get<uint32_t>();
        if (count != out.model.params.items().size()) {
            throw IntegrityError("checkpoint: parameter count mismatch");
        }
        for (auto& [name, t] : out.model.params.items_mut()) {
            const std::string got = r.get_string();
            if (got != name) {
                throw IntegrityError("checkpoint: parameter order mismatch: expected '" + name +
                                     "', found '" + got + "'");
            }
            const uint32_t rows = r.get<uint32_t>();
            const uint32_t cols = r.get<uint32_t>();
            if (rows != t.rows() || cols != t.cols()) {
                throw IntegrityError("checkpoint: shape mismatch for '" + name + "'");
            }
            r.get_bytes(t.data_mut(), t.numel() * sizeof(real_t));
        }
    }
    {
        const auto& p = section("opt");
        Reader r(p.data(), p.size());
        out.opt.t = r.get<int64_t>();
        out.opt.beta1 = r.get<double>();
        out.opt.beta2 = r.get<double>();
        out.opt.eps = r.get<double>();
        const uint32_t count = r.get<uint32_t>();
        out.opt.m.resize(count);
        out.opt.v.resize(count);
        for (uint32_t i = 0; i < count; ++i) {
            const uint64_t n = r.get<uint64_t>();
            out.opt.m[i].resize(n);
            out.opt.v[i].resize(n);
            r.get_bytes(out.opt.m[i].data(), n * sizeof(real_t));
            r.get_bytes(out.opt.v[i].data(), n * sizeof(real_t));
        }
        if (count > 0 && count != out.model.params.items().size()) {
            throw IntegrityError("checkpoint: optimizer state count mismatch");
        }
    }
    {
        const auto& p = section("rng");
        Reader r(p.data(), p.size());
        Rng::State st;
        for (auto& w : st.s) w = r.get<uint64_t>();
        st.has_spare = r.get<uint8_t>() != 0;
        st.spare = r.get<double>();
        out.rng.set_state(st);
    }
    {
        const auto& p = section("meta");
        Reader r(p.data(), p.size());
        out.train_step = r.get<int64_t>();
    }
    return out;
}

}  // namespace rdvla
