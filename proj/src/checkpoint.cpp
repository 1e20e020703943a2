#include "vrn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace vrn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'V', 'R', 'N', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("truncated checkpoint");
    return v;
}

void write_blocks(std::ostream& out, const ParamStore& store) {
    for (std::size_t i = 0; i < store.count(); ++i) {
        const std::string& name = store.name(i);
        const Matrix& m = store.block(i);
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint64_t>(m.rows));
        write_pod(out, static_cast<std::uint64_t>(m.cols));
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    }
}

void read_blocks(std::istream& in, std::uint32_t count, ParamStore& model_params,
                 ParamStore* baseline_params) {
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        auto rows = read_pod<std::uint64_t>(in);
        auto cols = read_pod<std::uint64_t>(in);

        ParamStore* target = &model_params;
        if (name.rfind("baseline.", 0) == 0) {
            if (baseline_params == nullptr) {
                in.seekg(static_cast<std::streamoff>(rows * cols * sizeof(double)),
                         std::ios::cur);
                if (!in) throw Error("truncated checkpoint");
                continue;
            }
            target = baseline_params;
        }
        Matrix& m = target->block(target->index_of(name));
        if (m.rows != rows || m.cols != cols)
            throw Error("checkpoint block shape mismatch for " + name);
        in.read(reinterpret_cast<char*>(m.data.data()),
                static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        if (!in) throw Error("truncated checkpoint");
    }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& header,
                     const ParamStore& model_params,
                     const ParamStore* baseline_params) {
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, header.format_version);
    std::uint32_t flags = (header.model_config.name_bow ? 1u : 0u) |
                          (header.model_config.share_posterior ? 2u : 0u) |
                          (header.model_config.directional_relations ? 4u : 0u);
    write_pod(out, flags);
    write_pod(out, header.model_config.dim);
    write_pod(out, header.num_relations);
    write_pod(out, header.num_entities);
    write_pod(out, header.vocab_size);
    write_pod(out, header.step);
    write_pod(out, header.baseline_hidden);
    write_pod(out, header.signal.mu);
    write_pod(out, header.signal.sigma);
    write_pod(out, header.signal.decay);
    write_pod(out, header.signal.sigma_floor);

    std::uint32_t n_blocks = static_cast<std::uint32_t>(
        model_params.count() + (baseline_params ? baseline_params->count() : 0));
    write_pod(out, n_blocks);
    write_blocks(out, model_params);
    if (baseline_params) write_blocks(out, *baseline_params);
    if (!out) throw Error("checkpoint write failed");
}

Checkpoint load_checkpoint(std::istream& in, ParamStore& model_params,
                           ParamStore* baseline_params) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("not a checkpoint file");

    Checkpoint header;
    header.format_version = read_pod<std::uint32_t>(in);
    if (header.format_version != 1)
        throw Error("unsupported checkpoint version " +
                    std::to_string(header.format_version));
    auto flags = read_pod<std::uint32_t>(in);
    header.model_config.name_bow = flags & 1u;
    header.model_config.share_posterior = flags & 2u;
    header.model_config.directional_relations = flags & 4u;
    header.model_config.dim = read_pod<std::uint32_t>(in);
    header.num_relations = read_pod<std::uint32_t>(in);
    header.num_entities = read_pod<std::uint64_t>(in);
    header.vocab_size = read_pod<std::uint64_t>(in);
    header.step = read_pod<std::uint64_t>(in);
    header.baseline_hidden = read_pod<std::uint32_t>(in);
    header.signal.mu = read_pod<double>(in);
    header.signal.sigma = read_pod<double>(in);
    header.signal.decay = read_pod<double>(in);
    header.signal.sigma_floor = read_pod<double>(in);

    auto n_blocks = read_pod<std::uint32_t>(in);
    read_blocks(in, n_blocks, model_params, baseline_params);
    return header;
}

Checkpoint read_checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("not a checkpoint file");
    Checkpoint header;
    header.format_version = read_pod<std::uint32_t>(in);
    auto flags = read_pod<std::uint32_t>(in);
    header.model_config.name_bow = flags & 1u;
    header.model_config.share_posterior = flags & 2u;
    header.model_config.directional_relations = flags & 4u;
    header.model_config.dim = read_pod<std::uint32_t>(in);
    header.num_relations = read_pod<std::uint32_t>(in);
    header.num_entities = read_pod<std::uint64_t>(in);
    header.vocab_size = read_pod<std::uint64_t>(in);
    header.step = read_pod<std::uint64_t>(in);
    header.baseline_hidden = read_pod<std::uint32_t>(in);
    header.signal.mu = read_pod<double>(in);
    header.signal.sigma = read_pod<double>(in);
    header.signal.decay = read_pod<double>(in);
    header.signal.sigma_floor = read_pod<double>(in);
    return header;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& header,
                          const ParamStore& model_params,
                          const ParamStore* baseline_params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    save_checkpoint(out, header, model_params, baseline_params);
}

Checkpoint load_checkpoint_file(const std::string& path, ParamStore& model_params,
                                ParamStore* baseline_params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    return load_checkpoint(in, model_params, baseline_params);
}

}  // namespace vrn
