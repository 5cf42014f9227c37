#include "padicdiff/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace padicdiff {

namespace {

using nlohmann::ordered_json;

ManifoldModel model_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw validation_error("model spec: top level must be an object");
    for (const char* key : {"p", "n", "depth", "faces", "roots"}) {
        if (!doc.contains(key)) throw validation_error(std::string("model spec: missing field '") + key + "'");
    }

    const long long p = doc.at("p").get<long long>();
    const int n = doc.at("n").get<int>();
    const int m = doc.at("depth").get<int>();
    PrimeContext ctx(p, n, m);

    NerveComplex nerve;
    std::map<std::string, int> vertex_index;
    for (const auto& face : doc.at("faces")) {
        if (!face.contains("id") || !face.contains("vertices")) {
            throw validation_error("model spec: face needs 'id' and 'vertices'");
        }
        for (const auto& v : face.at("vertices")) {
            const std::string vid = v.get<std::string>();
            if (vertex_index.find(vid) == vertex_index.end()) {
                vertex_index[vid] = static_cast<int>(nerve.vertex_ids.size());
                nerve.vertex_ids.push_back(vid);
            }
        }
    }
    for (const auto& face : doc.at("faces")) {
        NerveFace f;
        f.id = face.at("id").get<std::string>();
        for (const auto& v : face.at("vertices")) f.vertices.push_back(vertex_index.at(v.get<std::string>()));
        std::sort(f.vertices.begin(), f.vertices.end());
        nerve.faces.push_back(std::move(f));
    }

    std::vector<RootBall> roots;
    for (const auto& root : doc.at("roots")) {
        for (const char* key : {"id", "face", "density"}) {
            if (!root.contains(key)) throw validation_error(std::string("model spec: root needs '") + key + "'");
        }
        RootBall r;
        r.id = root.at("id").get<std::string>();
        const std::string face_id = root.at("face").get<std::string>();
        r.face = nerve.face_by_id(face_id);
        if (r.face < 0) throw validation_error("model spec: root '" + r.id + "' names unknown face '" + face_id + "'");
        r.density = Rational::parse(root.at("density").get<std::string>());
        roots.push_back(std::move(r));
    }

    return ManifoldModel::build(ctx, std::move(nerve), std::move(roots));
}

} // namespace

ManifoldModel load_model(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw validation_error(std::string("model spec: parse error: ") + e.what());
    }
    return model_from_json(doc);
}

ManifoldModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw validation_error("model spec: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

std::string model_to_json(const ManifoldModel& model) {
    ordered_json doc;
    doc["p"] = model.ctx().p;
    doc["n"] = model.ctx().n;
    doc["depth"] = model.ctx().m;
    doc["faces"] = ordered_json::array();
    for (const auto& f : model.nerve().faces) {
        ordered_json face;
        face["id"] = f.id;
        face["vertices"] = ordered_json::array();
        for (int v : f.vertices) face["vertices"].push_back(model.nerve().vertex_ids[static_cast<std::size_t>(v)]);
        doc["faces"].push_back(std::move(face));
    }
    doc["roots"] = ordered_json::array();
    for (const auto& r : model.roots()) {
        ordered_json root;
        root["id"] = r.id;
        root["face"] = model.nerve().faces[static_cast<std::size_t>(r.face)].id;
        root["density"] = r.density.str();
        doc["roots"].push_back(std::move(root));
    }
    return doc.dump(2) + "\n";
}

ManifoldModel builtin_model(const std::string& name, const BuiltinOptions& opts) {
    if (name == "single_ball") {
        PrimeContext ctx(opts.p.value_or(2), opts.n.value_or(1), opts.m);
        NerveComplex nerve;
        nerve.vertex_ids = {"v0"};
        nerve.faces = {{"v0", {0}}};
        std::vector<RootBall> roots = {{"r0", 0, opts.density.value_or(Rational(1))}};
        return ManifoldModel::build(ctx, std::move(nerve), std::move(roots));
    }
    if (name == "p1_q2") {
        if (opts.p.value_or(2) != 2 || opts.n.value_or(1) != 1) {
            throw validation_error("builtin p1_q2 fixes p = 2 and n = 1");
        }
        PrimeContext ctx(2, 1, opts.m);
        NerveComplex nerve;
        nerve.vertex_ids = {"v0", "v1"};
        nerve.faces = {{"v0", {0}}, {"v1", {1}}, {"e01", {0, 1}}};
        std::vector<RootBall> roots = {
            {"r0", 0, Rational(1, 2)},
            {"r1", 1, Rational(1, 2)},
            {"r01", 2, Rational(1, 2)},
        };
        return ManifoldModel::build(ctx, std::move(nerve), std::move(roots));
    }
    if (name == "triangle") {
        PrimeContext ctx(opts.p.value_or(2), opts.n.value_or(1), opts.m);
        NerveComplex nerve;
        nerve.vertex_ids = {"v0", "v1", "v2"};
        nerve.faces = {
            {"v0", {0}},        {"v1", {1}},        {"v2", {2}},
            {"e01", {0, 1}},    {"e02", {0, 2}},    {"e12", {1, 2}},
            {"f012", {0, 1, 2}},
        };
        std::vector<RootBall> roots = {
            {"r0", 0, Rational(1)},      {"r1", 1, Rational(1)},      {"r2", 2, Rational(1)},
            {"r01", 3, Rational(1, 2)},  {"r02", 4, Rational(1, 2)},  {"r12", 5, Rational(1, 2)},
            {"r012", 6, Rational(1, 4)},
        };
        return ManifoldModel::build(ctx, std::move(nerve), std::move(roots));
    }
    throw validation_error("unknown builtin model '" + name + "'");
}

} // namespace padicdiff
