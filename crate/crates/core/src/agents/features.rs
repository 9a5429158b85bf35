use crate::envs::Observation;

/// Dense network input for an observation.
///
/// Layout: `[agent_x, agent_y, car1_x, car1_dir, car2_x, car2_dir, ...]`,
/// with positions scaled to `[0, 1]` by the grid size and `dir` the sign of
/// the car's horizontal velocity. Cars appear in observation order; their
/// rows are fixed by the lane configuration and therefore omitted.
pub fn featurize(obs: &Observation) -> Vec<f64> {
    let sx = f64::from((obs.width - 1).max(1));
    let sy = f64::from((obs.height - 1).max(1));
    let mut out = Vec::with_capacity(2 + 2 * obs.objects.len());
    if let Some(a) = obs.agent() {
        out.push(f64::from(a.pos.x) / sx);
        out.push(f64::from(a.pos.y) / sy);
    } else {
        out.extend([0.0, 0.0]);
    }
    for car in obs.cars() {
        out.push(f64::from(car.pos.x) / sx);
        out.push(if car.velocity.0 < 0 { -1.0 } else { 1.0 });
    }
    out
}

pub fn feature_len(n_cars: usize) -> usize {
    2 + 2 * n_cars
}
