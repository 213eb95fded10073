#include "burrsim/record/events.hpp"

namespace burrsim {

std::string_view group_name(EventGroup group) noexcept
{
    switch (group) {
    case EventGroup::Sequence: return "sequence";
    case EventGroup::VoxelsRemoved: return "voxels_removed";
    case EventGroup::ForceFeedback: return "force_feedback";
    case EventGroup::BurrChange: return "burr_change";
    case EventGroup::Kinematics: return "kinematics";
    case EventGroup::DepthFrames: return "depth_frames";
    case EventGroup::DepthData: return "depth_data";
    case EventGroup::Pupil: return "pupil";
    }
    return "?";
}

double event_time(const EventRecord& ev) noexcept
{
    return std::visit([](const auto& e) { return e.t; }, ev);
}

EventGroup event_group(const EventRecord& ev) noexcept
{
    switch (ev.index()) {
    case 0: return EventGroup::VoxelsRemoved;
    case 1: return EventGroup::ForceFeedback;
    case 2: return EventGroup::BurrChange;
    case 3: return EventGroup::Kinematics;
    default: return EventGroup::DepthFrames;
    }
}

std::size_t record_width(EventGroup group) noexcept
{
    switch (group) {
    case EventGroup::Sequence: return 1;
    case EventGroup::VoxelsRemoved: return 8 + 3 * 4 + 2 + 3 * 4;
    case EventGroup::ForceFeedback: return 8 + 3 * 8;
    case EventGroup::BurrChange: return 8 + 8 + 1;
    case EventGroup::Kinematics: return 15 * 8;
    case EventGroup::DepthFrames: return 8 + 4 + 4 + 8;
    case EventGroup::DepthData:
    case EventGroup::Pupil: return 0;
    }
    return 0;
}

std::size_t naive_log_size(const std::vector<EventRecord>& events) noexcept
{
    std::size_t total = 0;
    for (const auto& ev : events) {
        total += 1 + record_width(event_group(ev));
        if (const auto* d = std::get_if<DepthFrameEvent>(&ev)) {
            total += d->depth_mm.size() * sizeof(float) + d->labels.size() * sizeof(Label);
        }
    }
    return total;
}

} // namespace burrsim
