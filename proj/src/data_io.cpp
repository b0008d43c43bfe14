#include "pg/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pg {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

PointCloud read_xyzl(const std::string& path, std::istream& in) {
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    std::vector<double> fields;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        fields.clear();
        double v;
        while (ls >> v) fields.push_back(v);
        if (fields.empty()) continue;
        if (fields.size() < 4) parse_fail(path, lineno, "expected at least `x y z label`");
        if (width == 0)
            width = fields.size();
        else if (fields.size() != width)
            parse_fail(path, lineno, "inconsistent column count");
        for (std::size_t i = 0; i + 1 < fields.size(); ++i)
            if (!std::isfinite(fields[i])) parse_fail(path, lineno, "non-finite coordinate");
        const double label_f = fields.back();
        if (label_f != std::floor(label_f) || label_f < 0)
            parse_fail(path, lineno, "label must be a non-negative integer");
        cloud.positions.insert(cloud.positions.end(), fields.begin(), fields.begin() + 3);
        cloud.features.insert(cloud.features.end(), fields.begin() + 3, fields.end() - 1);
        cloud.labels.push_back(static_cast<int>(label_f));
        ++cloud.n;
    }
    if (cloud.n == 0) throw std::runtime_error(path + ": no points");
    cloud.d = width - 4;
    return cloud;
}

PointCloud read_ply(const std::string& path, std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](const char* expect) {
        if (!std::getline(in, line)) parse_fail(path, lineno, std::string("truncated header, expected ") + expect);
        ++lineno;
        return line;
    };
    if (next_line("`ply`") != "ply") parse_fail(path, lineno, "missing `ply` magic");
    if (next_line("`format ascii 1.0`") != "format ascii 1.0")
        parse_fail(path, lineno, "missing `format ascii 1.0`");
    std::size_t n = 0;
    std::vector<std::string> props;
    bool header_done = false;
    while (!header_done) {
        next_line("`end_header`");
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment") continue;
        if (word == "element") {
            std::string what;
            ls >> what >> n;
            if (what != "vertex") parse_fail(path, lineno, "unsupported element `" + what + "`");
        } else if (word == "property") {
            std::string type, name;
            ls >> type >> name;
            props.push_back(name);
        } else if (word == "end_header") {
            header_done = true;
        } else {
            parse_fail(path, lineno, "unexpected header line `" + line + "`");
        }
    }
    if (n == 0) parse_fail(path, lineno, "missing `element vertex` declaration");
    for (const char* req : {"x", "y", "z", "label"}) {
        bool found = false;
        for (const auto& p : props) found |= (p == req);
        if (!found) parse_fail(path, lineno, std::string("missing `") + req + "` vertex property");
    }
    PointCloud cloud;
    cloud.n = n;
    cloud.d = props.size() - 4;
    for (std::size_t i = 0; i < n; ++i) {
        next_line("vertex row");
        std::istringstream ls(line);
        std::vector<double> fields;
        double v;
        while (ls >> v) fields.push_back(v);
        if (fields.size() != props.size()) parse_fail(path, lineno, "wrong column count in vertex row");
        // property order is as declared: x y z [features...] label
        for (std::size_t j = 0; j < 3; ++j) {
            if (!std::isfinite(fields[j])) parse_fail(path, lineno, "non-finite coordinate");
            cloud.positions.push_back(fields[j]);
        }
        for (std::size_t j = 3; j + 1 < fields.size(); ++j) cloud.features.push_back(fields[j]);
        cloud.labels.push_back(static_cast<int>(fields.back()));
    }
    return cloud;
}

} // namespace

CloudFormat format_for_path(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") return CloudFormat::AsciiPly;
    return CloudFormat::Xyzl;
}

PointCloud read_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    PointCloud cloud = (format_for_path(path) == CloudFormat::AsciiPly) ? read_ply(path, in)
                                                                        : read_xyzl(path, in);
    cloud.validate();
    return cloud;
}

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
    cloud.validate();
    std::ostringstream os;
    if (format == CloudFormat::AsciiPly) {
        os << "ply\nformat ascii 1.0\nelement vertex " << cloud.n << "\n"
           << "property float x\nproperty float y\nproperty float z\n";
        for (std::size_t j = 0; j < cloud.d; ++j) os << "property float f" << j << "\n";
        os << "property uchar label\nend_header\n";
    }
    for (std::size_t i = 0; i < cloud.n; ++i) {
        os << format_double(cloud.positions[i * 3]) << " " << format_double(cloud.positions[i * 3 + 1])
           << " " << format_double(cloud.positions[i * 3 + 2]);
        for (std::size_t j = 0; j < cloud.d; ++j) os << " " << format_double(cloud.features[i * cloud.d + j]);
        os << " " << (cloud.has_labels() ? cloud.labels[i] : 0) << "\n";
    }
    write_file_atomic(path, os.str());
}

void SyntheticSceneSpec::validate() const {
    if (extent <= 0 || point_density <= 0) throw std::invalid_argument("extent and density must be positive");
    if (radius_min <= 0 || radius_max < radius_min) throw std::invalid_argument("bad pothole radius range");
    if (depth_min <= 0 || depth_max < depth_min) throw std::invalid_argument("bad pothole depth range");
    if (roughness < 0 || noise_sigma < 0) throw std::invalid_argument("negative amplitude");
    if (pothole_count > 0 && 2.0 * radius_max >= extent)
        throw std::invalid_argument("potholes cannot fit inside the patch extent");
}

double bowl_depth(double r, double rim_radius, double depth) {
    if (r >= rim_radius) return 0.0;
    return depth * (1.0 + std::cos(M_PI * r / rim_radius)) / 2.0;
}

PointCloud generate_scene(const SyntheticSceneSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const std::size_t n = static_cast<std::size_t>(std::llround(spec.extent * spec.extent * spec.point_density));
    if (n == 0) throw std::invalid_argument("spec yields an empty cloud");

    // Low-frequency surface: a few seeded sinusoidal modes across the patch.
    struct Mode {
        double fx, fy, phase, amp;
    };
    std::vector<Mode> modes(3);
    for (auto& m : modes) {
        m.fx = uniform_in(rng, 0.5, 2.0) * M_PI / spec.extent;
        m.fy = uniform_in(rng, 0.5, 2.0) * M_PI / spec.extent;
        m.phase = uniform_in(rng, 0.0, 2.0 * M_PI);
        m.amp = spec.roughness * uniform_in(rng, 0.5, 1.0);
    }
    auto surface = [&](double x, double y) {
        double z = 0.0;
        for (const auto& m : modes) z += m.amp * std::sin(m.fx * x + m.fy * y + m.phase);
        return z;
    };

    // Non-overlapping pothole bowls, bounded retries.
    struct Bowl {
        double cx, cy, radius, depth;
    };
    std::vector<Bowl> bowls;
    const std::size_t max_tries = 200 * (spec.pothole_count + 1);
    std::size_t tries = 0;
    while (bowls.size() < spec.pothole_count) {
        if (++tries > max_tries)
            throw std::runtime_error("could not place " + std::to_string(spec.pothole_count) +
                                     " non-overlapping potholes after " + std::to_string(max_tries) +
                                     " attempts");
        Bowl b;
        b.radius = uniform_in(rng, spec.radius_min, spec.radius_max);
        b.depth = uniform_in(rng, spec.depth_min, spec.depth_max);
        b.cx = uniform_in(rng, b.radius, spec.extent - b.radius);
        b.cy = uniform_in(rng, b.radius, spec.extent - b.radius);
        bool ok = true;
        for (const auto& o : bowls) {
            const double dx = b.cx - o.cx, dy = b.cy - o.cy;
            if (std::sqrt(dx * dx + dy * dy) < b.radius + o.radius) ok = false;
        }
        if (ok) bowls.push_back(b);
    }

    PointCloud cloud;
    cloud.n = n;
    cloud.d = 0;
    cloud.positions.resize(n * 3);
    cloud.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = uniform_in(rng, 0.0, spec.extent);
        const double y = uniform_in(rng, 0.0, spec.extent);
        double z = surface(x, y) + spec.noise_sigma * normal01(rng);
        int label = 0;
        for (const auto& b : bowls) {
            const double dx = x - b.cx, dy = y - b.cy;
            const double r = std::sqrt(dx * dx + dy * dy);
            const double depth = bowl_depth(r, b.radius, b.depth);
            z -= depth;
            if (r < b.radius && depth > spec.noise_sigma) label = 1;
        }
        cloud.positions[i * 3] = x;
        cloud.positions[i * 3 + 1] = y;
        cloud.positions[i * 3 + 2] = z;
        cloud.labels[i] = label;
    }
    return cloud;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        std::uint32_t len = u32();
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t bytes) {
        if (pos_ + bytes > data_.size()) throw std::runtime_error(path_ + ": truncated checkpoint file");
    }
    std::string data_;
    std::string path_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'P', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_checkpoint(const std::string& path, const ParamRegistry& reg,
                     const std::string& config_text, std::size_t epoch_cursor,
                     const AdamOptimizer* opt) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, opt ? 1u : 0u);
    put_u64(out, epoch_cursor);
    put_str(out, config_text);
    put_u32(out, static_cast<std::uint32_t>(reg.params().size()));
    for (const Parameter* p : reg.params()) {
        put_str(out, p->name);
        put_u32(out, static_cast<std::uint32_t>(p->shape.size()));
        for (std::size_t e : p->shape) put_u64(out, e);
        for (double v : p->value) put_f64(out, v);
    }
    if (opt) {
        AdamOptimizer& o = const_cast<AdamOptimizer&>(*opt);
        put_u64(out, o.step_counter());
        if (o.states().size() != reg.params().size())
            throw std::logic_error("optimizer state count does not match registry");
        for (std::size_t i = 0; i < o.states().size(); ++i) {
            for (double v : o.states()[i].m) put_f64(out, v);
            for (double v : o.states()[i].v) put_f64(out, v);
        }
    }
    write_file_atomic(path, out);
}

CheckpointContents load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string raw = buf.str();
    if (raw.size() < 4 || std::memcmp(raw.data(), kMagic, 4) != 0)
        throw std::runtime_error(path + ": not a PGCK checkpoint (bad magic)");
    Reader rd(raw.substr(4), path);
    CheckpointContents c;
    c.version = rd.u32();
    if (c.version != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(c.version));
    const std::uint32_t flags = rd.u32();
    c.has_optimizer = (flags & 1u) != 0;
    c.epoch_cursor = rd.u64();
    c.config_text = rd.str();
    const std::uint32_t count = rd.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        c.names.push_back(rd.str());
        const std::uint32_t rank = rd.u32();
        Shape shape;
        for (std::uint32_t j = 0; j < rank; ++j) shape.push_back(rd.u64());
        std::vector<double> vals(shape_size(shape));
        for (double& v : vals) v = rd.f64();
        c.shapes.push_back(std::move(shape));
        c.values.push_back(std::move(vals));
    }
    if (c.has_optimizer) {
        c.adam_step = rd.u64();
        for (std::uint32_t i = 0; i < count; ++i) {
            std::vector<double> m(c.values[i].size()), v(c.values[i].size());
            for (double& x : m) x = rd.f64();
            for (double& x : v) x = rd.f64();
            c.adam_m.push_back(std::move(m));
            c.adam_v.push_back(std::move(v));
        }
    }
    if (!rd.at_end()) throw std::runtime_error(path + ": trailing bytes in checkpoint");
    return c;
}

void apply_checkpoint(const CheckpointContents& ckpt, ParamRegistry& reg, AdamOptimizer* opt) {
    const auto& params = reg.params();
    if (ckpt.names.size() != params.size())
        throw std::runtime_error("checkpoint holds " + std::to_string(ckpt.names.size()) +
                                 " parameters, network has " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (ckpt.names[i] != params[i]->name)
            throw std::runtime_error("checkpoint parameter `" + ckpt.names[i] + "` does not match `" +
                                     params[i]->name + "`");
        if (ckpt.shapes[i] != params[i]->shape)
            throw std::runtime_error("shape mismatch for " + params[i]->name + ": checkpoint " +
                                     shape_str(ckpt.shapes[i]) + " vs network " + shape_str(params[i]->shape));
        params[i]->value = ckpt.values[i];
    }
    if (opt) {
        if (!ckpt.has_optimizer) throw std::runtime_error("checkpoint has no optimizer state");
        opt->states().clear();
        for (std::size_t i = 0; i < params.size(); ++i)
            opt->states().push_back(AdamOptimizer::State{ckpt.adam_m[i], ckpt.adam_v[i]});
        opt->step_counter() = ckpt.adam_step;
    }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << contents;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace pg
