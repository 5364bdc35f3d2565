#include "rfsim/cnn_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <vector>

#include "rfsim/crc32.hpp"

namespace rfsim {

namespace {

constexpr char kModelMagic[4] = {'R', 'F', 'N', 'N'};
constexpr std::uint16_t kModelVersion = 1;
constexpr std::uint16_t kTagConvWeight = 1, kTagConvBias = 2, kTagDenseWeight = 3, kTagDenseBias = 4;

struct TensorRef {
    std::uint16_t tag;
    std::vector<std::uint32_t> dims;
    const float* data;
    std::size_t count;
};

std::vector<TensorRef> manifest(const CnnModel<float>& model) {
    std::vector<TensorRef> refs;
    const auto geoms = model.geometry();
    for (int i = 0; i < 4; ++i) {
        const auto& g = geoms[i];
        refs.push_back({kTagConvWeight,
                        {static_cast<std::uint32_t>(g.c_out), static_cast<std::uint32_t>(g.c_in),
                         static_cast<std::uint32_t>(g.kh), static_cast<std::uint32_t>(g.kw)},
                        model.params.conv_w[i].data(),
                        static_cast<std::size_t>(model.params.conv_w[i].size())});
        refs.push_back({kTagConvBias,
                        {static_cast<std::uint32_t>(g.c_out)},
                        model.params.conv_b[i].data(),
                        static_cast<std::size_t>(model.params.conv_b[i].size())});
    }
    for (int i = 0; i < 3; ++i) {
        refs.push_back({kTagDenseWeight,
                        {static_cast<std::uint32_t>(model.params.dense_w[i].rows()),
                         static_cast<std::uint32_t>(model.params.dense_w[i].cols())},
                        model.params.dense_w[i].data(),
                        static_cast<std::size_t>(model.params.dense_w[i].size())});
        refs.push_back({kTagDenseBias,
                        {static_cast<std::uint32_t>(model.params.dense_b[i].size())},
                        model.params.dense_b[i].data(),
                        static_cast<std::size_t>(model.params.dense_b[i].size())});
    }
    return refs;
}

}  // namespace

void save_model(const CnnModel<float>& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };

    const auto refs = manifest(model);
    out.write(kModelMagic, 4);
    u16(kModelVersion);
    u32(static_cast<std::uint32_t>(refs.size()));
    for (const auto& r : refs) {
        u16(r.tag);
        u16(static_cast<std::uint16_t>(r.dims.size()));
        for (std::uint32_t d : r.dims) u32(d);
    }

    std::uint32_t crc = 0;
    for (const auto& r : refs) {
        out.write(reinterpret_cast<const char*>(r.data), static_cast<std::streamsize>(4 * r.count));
        crc = crc32(r.data, 4 * r.count, crc);
    }
    u32(crc);
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path);
}

CnnModel<float> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    auto take = [&](std::size_t n) {
        if (pos + n > data.size()) throw FormatError("truncated checkpoint", pos);
        const std::uint8_t* p = data.data() + pos;
        pos += n;
        return p;
    };
    auto u16 = [&] {
        std::uint16_t v;
        std::memcpy(&v, take(2), 2);
        return v;
    };
    auto u32 = [&] {
        std::uint32_t v;
        std::memcpy(&v, take(4), 4);
        return v;
    };

    if (std::memcmp(take(4), kModelMagic, 4) != 0) throw FormatError("bad magic", 0);
    if (u16() != kModelVersion) throw FormatError("unsupported version", 4);
    const std::uint32_t n_tensors = u32();
    if (n_tensors != 14) throw FormatError("unexpected tensor count", pos - 4);

    struct Entry {
        std::uint16_t tag;
        std::vector<std::uint32_t> dims;
    };
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        Entry e;
        e.tag = u16();
        const std::uint16_t nd = u16();
        for (std::uint16_t d = 0; d < nd; ++d) e.dims.push_back(u32());
        entries.push_back(std::move(e));
    }

    // Reconstruct the layer spec from the manifest and validate the chain.
    const std::uint16_t expected_tags[14] = {1, 2, 1, 2, 1, 2, 1, 2, 3, 4, 3, 4, 3, 4};
    for (int i = 0; i < 14; ++i)
        if (entries[i].tag != expected_tags[i]) throw FormatError("unexpected tensor tag", 10);
    if (entries[0].dims.size() != 4 || entries[8].dims.size() != 2)
        throw FormatError("corrupted shape field", 10);

    CnnSpec spec;
    spec.conv_filters = static_cast<int>(entries[0].dims[0]);
    spec.dense1 = static_cast<int>(entries[8].dims[0]);
    spec.dense2 = static_cast<int>(entries[10].dims[0]);
    spec.n_classes = static_cast<int>(entries[12].dims[0]);

    CnnModel<float> model;
    try {
        model = CnnModel<float>::init(spec, 0);
    } catch (const InvalidInput&) {
        throw FormatError("corrupted shape field", 10);
    }
    const auto geoms = model.geometry();
    auto expect = [&](const Entry& e, std::initializer_list<std::uint32_t> dims) {
        if (e.dims.size() != dims.size() || !std::equal(dims.begin(), dims.end(), e.dims.begin()))
            throw FormatError("corrupted shape field", 10);
    };
    for (int i = 0; i < 4; ++i) {
        expect(entries[2 * i], {static_cast<std::uint32_t>(geoms[i].c_out),
                                static_cast<std::uint32_t>(geoms[i].c_in),
                                static_cast<std::uint32_t>(geoms[i].kh),
                                static_cast<std::uint32_t>(geoms[i].kw)});
        expect(entries[2 * i + 1], {static_cast<std::uint32_t>(geoms[i].c_out)});
    }
    expect(entries[8], {static_cast<std::uint32_t>(spec.dense1),
                        static_cast<std::uint32_t>(model.spec.flatten_size())});
    expect(entries[9], {static_cast<std::uint32_t>(spec.dense1)});
    expect(entries[10], {static_cast<std::uint32_t>(spec.dense2), static_cast<std::uint32_t>(spec.dense1)});
    expect(entries[11], {static_cast<std::uint32_t>(spec.dense2)});
    expect(entries[12], {static_cast<std::uint32_t>(spec.n_classes), static_cast<std::uint32_t>(spec.dense2)});
    expect(entries[13], {static_cast<std::uint32_t>(spec.n_classes)});

    std::uint32_t crc = 0;
    const std::size_t payload_start = pos;
    for_each_tensor(model.params, [&](auto& t) {
        const std::size_t bytes = 4 * static_cast<std::size_t>(t.size());
        std::memcpy(t.data(), take(bytes), bytes);
    });
    crc = crc32(data.data() + payload_start, pos - payload_start);
    const std::uint32_t stored_crc = u32();
    if (crc != stored_crc) throw FormatError("checksum mismatch", pos - 4);
    if (pos != data.size()) throw FormatError("trailing bytes after checkpoint", pos);
    return model;
}

}  // namespace rfsim
