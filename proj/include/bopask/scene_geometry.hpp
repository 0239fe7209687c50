#ifndef BOPASK_SCENE_GEOMETRY_HPP
#define BOPASK_SCENE_GEOMETRY_HPP

#include "bopask/bop_ingest.hpp"
#include "bopask/geometry.hpp"
#include "bopask/world_frame.hpp"

namespace bopask {

/// Oriented cuboid of an object instance in the camera frame. BOP models
/// are origin-centered up to the min/size offset recorded in models_info.
inline Cuboid3D cuboid_from_instance(const ObjectInstance& inst, const ModelInfo& model) {
    Cuboid3D c;
    c.half_extents = model.size * 0.5;
    Pose offset;
    offset.translation = model.center_offset;
    c.pose = inst.pose_cam.compose(offset);
    return c;
}

/// Camera-frame cuboids for a whole frame, indexed like frame.instances.
inline std::vector<Cuboid3D> frame_cuboids_cam(const SceneFrame& frame,
                                               const ModelTable& models) {
    std::vector<Cuboid3D> out;
    out.reserve(frame.instances.size());
    for (const ObjectInstance& inst : frame.instances)
        out.push_back(cuboid_from_instance(inst, models.at(inst.obj_id)));
    return out;
}

/// The same cuboids lifted into the recovered world frame (mm).
inline std::vector<Cuboid3D> frame_cuboids_world(const SceneFrame& frame,
                                                 const ModelTable& models,
                                                 const WorldTransform& world) {
    std::vector<Cuboid3D> out = frame_cuboids_cam(frame, models);
    const Pose lift = world.cam_to_world_pose_mm();
    for (Cuboid3D& c : out) c = c.in_frame(lift);
    return out;
}

}  // namespace bopask

#endif  // BOPASK_SCENE_GEOMETRY_HPP
