#ifndef BOPASK_BOP_INGEST_HPP
#define BOPASK_BOP_INGEST_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bopask/camera.hpp"
#include "bopask/mesh.hpp"
#include "bopask/png_io.hpp"
#include "bopask/pose.hpp"

namespace bopask {

using Json = nlohmann::json;

struct ModelInfo {
    int obj_id = 0;
    Vec3 size = Vec3::Zero();      // full extents, mm
    double diameter = 0;           // max vertex-pair distance, mm
    Vec3 center_offset = Vec3::Zero();  // cuboid center in the model frame
    std::optional<TriMesh> mesh;
    std::string description;
    std::string category_name;
};

using ModelTable = std::map<int, ModelInfo>;

struct ObjectInstance {
    int instance_id = 0;  // unique within the frame
    int obj_id = 0;
    Pose pose_cam;        // model -> camera, translation mm
    std::optional<double> visib_fract;
};

struct SceneFrame {
    int scene_id = 0;
    int frame_id = 0;
    CameraIntrinsics intrinsics;
    DepthImage depth;
    std::vector<ObjectInstance> instances;
    std::string rgb_path;  // pass-through reference, never decoded
};

struct LoadReport {
    std::vector<std::string> warnings;
};

namespace detail {

inline Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IngestError(IngestCode::missing, "missing file: " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw IngestError(IngestCode::shape,
                          "malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline Pose decode_pose(const Json& rot9, const Json& t3, const std::string& where) {
    if (!rot9.is_array() || rot9.size() != 9)
        throw IngestError(IngestCode::shape, "rotation is not 9 numbers in " + where);
    if (!t3.is_array() || t3.size() != 3)
        throw IngestError(IngestCode::shape, "translation is not 3 numbers in " + where);
    Pose pose;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            pose.rotation(r, c) = rot9[static_cast<std::size_t>(3 * r + c)].get<double>();
    for (int i = 0; i < 3; ++i) pose.translation[i] = t3[static_cast<std::size_t>(i)].get<double>();
    if (!pose.is_orthonormal(1e-6))
        throw IngestError(IngestCode::bad_pose,
                          "rotation not orthonormal (tol 1e-6) in " + where);
    return pose;
}

inline std::string frame_file_stem(int frame_id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", frame_id);
    return buf;
}

}  // namespace detail

/// Parse models_info.json plus the obj_id<TAB>description sidecar. Meshes
/// obj_<id>.ply are picked up from the models directory when present.
inline ModelTable load_model_table(const std::string& models_info_path,
                                   const std::string& descriptions_path = "") {
    namespace fs = std::filesystem;
    const Json info = detail::load_json_file(models_info_path);

    std::map<int, std::string> descriptions;
    if (!descriptions_path.empty() && fs::exists(descriptions_path)) {
        std::ifstream in(descriptions_path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0) continue;
            try {
                descriptions[std::stoi(line.substr(0, tab))] = line.substr(tab + 1);
            } catch (const std::exception&) {
                continue;  // non-numeric id line, skip
            }
        }
    }

    const fs::path models_dir = fs::path(models_info_path).parent_path();
    ModelTable table;
    for (const auto& [key, entry] : info.items()) {
        ModelInfo m;
        m.obj_id = std::stoi(key);
        m.size = {entry.at("size_x").get<double>(), entry.at("size_y").get<double>(),
                  entry.at("size_z").get<double>()};
        m.diameter = entry.value("diameter", m.size.norm());
        if (m.size.minCoeff() <= 0)
            throw IngestError(IngestCode::shape,
                              "non-positive extent for obj " + key);
        if (entry.contains("min_x")) {
            const Vec3 mins{entry.at("min_x").get<double>(),
                            entry.at("min_y").get<double>(),
                            entry.at("min_z").get<double>()};
            m.center_offset = mins + m.size * 0.5;
        }
        m.category_name = entry.value("name", "object " + key);
        const auto desc = descriptions.find(m.obj_id);
        m.description = desc != descriptions.end() ? desc->second : m.category_name;

        char mesh_name[32];
        std::snprintf(mesh_name, sizeof(mesh_name), "obj_%06d.ply", m.obj_id);
        const fs::path mesh_path = models_dir / mesh_name;
        if (fs::exists(mesh_path)) {
            TriMesh mesh = load_ply(mesh_path.string());
            if (mesh.valid()) m.mesh = std::move(mesh);
        }
        table[m.obj_id] = std::move(m);
    }
    return table;
}

/// Load one BOP scene directory (scene_camera.json, scene_gt.json, depth/)
/// into per-frame records, sorted by frame id. Frames without annotated
/// instances are skipped with a warning.
inline std::vector<SceneFrame> load_scene_dir(const std::string& scene_dir,
                                              const ModelTable& models,
                                              LoadReport* report = nullptr) {
    namespace fs = std::filesystem;
    const fs::path dir(scene_dir);
    const Json cameras = detail::load_json_file(dir / "scene_camera.json");
    const Json gt = detail::load_json_file(dir / "scene_gt.json");

    Json gt_info;
    if (fs::exists(dir / "scene_gt_info.json"))
        gt_info = detail::load_json_file(dir / "scene_gt_info.json");

    int scene_id = 0;
    try {
        scene_id = std::stoi(dir.filename().string());
    } catch (const std::exception&) {
        scene_id = 0;
    }

    std::vector<int> frame_ids;
    for (const auto& [key, value] : cameras.items()) frame_ids.push_back(std::stoi(key));
    std::sort(frame_ids.begin(), frame_ids.end());

    auto warn = [&](const std::string& msg) {
        if (report) report->warnings.push_back(msg);
        else std::cerr << "[bop_ingest] " << msg << "\n";
    };

    std::vector<SceneFrame> frames;
    for (int frame_id : frame_ids) {
        const std::string key = std::to_string(frame_id);
        const Json& cam = cameras.at(key);
        const Json& k = cam.at("cam_K");
        if (!k.is_array() || k.size() != 9)
            throw IngestError(IngestCode::shape,
                              "cam_K is not 9 numbers in frame " + key);

        SceneFrame frame;
        frame.scene_id = scene_id;
        frame.frame_id = frame_id;
        frame.intrinsics.fx = k[0].get<double>();
        frame.intrinsics.fy = k[4].get<double>();
        frame.intrinsics.cx = k[2].get<double>();
        frame.intrinsics.cy = k[5].get<double>();
        frame.intrinsics.depth_scale = cam.value("depth_scale", 1.0);

        const std::string stem = detail::frame_file_stem(frame_id);
        const fs::path depth_path = dir / "depth" / (stem + ".png");
        frame.depth = load_depth_png(depth_path.string());
        frame.intrinsics.width = frame.depth.width;
        frame.intrinsics.height = frame.depth.height;
        if (!frame.intrinsics.valid())
            throw IngestError(IngestCode::shape,
                              "invalid intrinsics in frame " + key);
        frame.rgb_path = (dir / "rgb" / (stem + ".png")).string();

        if (!gt.contains(key)) {
            warn("scene " + std::to_string(scene_id) + " frame " + key +
                 " has no ground-truth entry, skipped");
            continue;
        }
        const Json& entries = gt.at(key);
        int idx = 0;
        for (const Json& e : entries) {
            ObjectInstance inst;
            inst.instance_id = idx;
            inst.obj_id = e.at("obj_id").get<int>();
            if (!models.count(inst.obj_id))
                throw IngestError(IngestCode::unknown_model,
                                  "obj_id " + std::to_string(inst.obj_id) +
                                      " not in the model table (frame " + key + ")");
            inst.pose_cam =
                detail::decode_pose(e.at("cam_R_m2c"), e.at("cam_t_m2c"),
                                    "scene " + std::to_string(scene_id) + " frame " +
                                        key + " instance " + std::to_string(idx));
            if (gt_info.contains(key) &&
                idx < static_cast<int>(gt_info.at(key).size())) {
                const Json& gi = gt_info.at(key).at(static_cast<std::size_t>(idx));
                if (gi.contains("visib_fract"))
                    inst.visib_fract = gi.at("visib_fract").get<double>();
            }
            frame.instances.push_back(std::move(inst));
            ++idx;
        }
        if (frame.instances.empty()) {
            warn("scene " + std::to_string(scene_id) + " frame " + key +
                 " has zero annotated instances, skipped");
            continue;
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Writers — used by the synthetic exporter and the round-trip tests
// ---------------------------------------------------------------------------

inline void write_scene_dir(const std::string& scene_dir,
                            const std::vector<SceneFrame>& frames) {
    namespace fs = std::filesystem;
    const fs::path dir(scene_dir);
    fs::create_directories(dir / "depth");

    Json cameras = Json::object();
    Json gt = Json::object();
    for (const SceneFrame& f : frames) {
        const std::string key = std::to_string(f.frame_id);
        const CameraIntrinsics& k = f.intrinsics;
        cameras[key] = {
            {"cam_K", {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0}},
            {"depth_scale", k.depth_scale},
        };
        Json entries = Json::array();
        for (const ObjectInstance& inst : f.instances) {
            Json rot = Json::array();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) rot.push_back(inst.pose_cam.rotation(r, c));
            entries.push_back({
                {"cam_R_m2c", rot},
                {"cam_t_m2c",
                 {inst.pose_cam.translation.x(), inst.pose_cam.translation.y(),
                  inst.pose_cam.translation.z()}},
                {"obj_id", inst.obj_id},
            });
        }
        gt[key] = std::move(entries);
        save_depth_png(f.depth,
                       (dir / "depth" / (detail::frame_file_stem(f.frame_id) + ".png"))
                           .string());
    }
    std::ofstream(dir / "scene_camera.json") << cameras.dump(2) << "\n";
    std::ofstream(dir / "scene_gt.json") << gt.dump(2) << "\n";
}

inline void write_model_table(const std::string& models_dir, const ModelTable& table,
                              bool write_meshes = true) {
    namespace fs = std::filesystem;
    fs::create_directories(models_dir);
    Json info = Json::object();
    std::string descriptions;
    for (const auto& [obj_id, m] : table) {
        Json entry = {
            {"diameter", m.diameter},
            {"size_x", m.size.x()},
            {"size_y", m.size.y()},
            {"size_z", m.size.z()},
            {"min_x", m.center_offset.x() - m.size.x() * 0.5},
            {"min_y", m.center_offset.y() - m.size.y() * 0.5},
            {"min_z", m.center_offset.z() - m.size.z() * 0.5},
            {"name", m.category_name},
        };
        info[std::to_string(obj_id)] = std::move(entry);
        descriptions += std::to_string(obj_id) + "\t" + m.description + "\n";
        if (write_meshes && m.mesh) {
            char mesh_name[32];
            std::snprintf(mesh_name, sizeof(mesh_name), "obj_%06d.ply", obj_id);
            save_ply(*m.mesh, (fs::path(models_dir) / mesh_name).string());
        }
    }
    std::ofstream(fs::path(models_dir) / "models_info.json") << info.dump(2) << "\n";
    std::ofstream(fs::path(models_dir).parent_path() / "descriptions.tsv")
        << descriptions;
}

}  // namespace bopask

#endif  // BOPASK_BOP_INGEST_HPP
