//! Bundled world fixtures and a seeded random-world generator.
//!
//! The bundled suite is loop-heavy on purpose: rings, figure-eights, room
//! grids with cyclic door layouts, and serpentine corridors with shortcut
//! openings. All worlds are built deterministically so the suite can be
//! committed as fixture files and regenerated bit-identically.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::world::{octile_shortest_path, GoalEntry, GridWorld, ObjectEntry, WorldSidecar};

struct Canvas {
    w: usize,
    h: usize,
    cells: Vec<char>,
}

impl Canvas {
    fn filled(w: usize, h: usize, ch: char) -> Self {
        Self { w, h, cells: vec![ch; w * h] }
    }

    fn set(&mut self, x: usize, y: usize, ch: char) {
        self.cells[y * self.w + x] = ch;
    }

    fn get(&self, x: usize, y: usize) -> char {
        self.cells[y * self.w + x]
    }

    /// Fills the inclusive rectangle.
    fn rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, ch: char) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.set(x, y, ch);
            }
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.w + 1) * self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                out.push(self.get(x, y));
            }
            out.push('\n');
        }
        out
    }

    fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.h {
            for x in 0..self.w {
                if self.get(x, y) == '.' {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// A single rectangular ring corridor of width `c`.
fn ring_grid(w: usize, h: usize, c: usize) -> Canvas {
    let mut canvas = Canvas::filled(w, h, '#');
    canvas.rect(1, 1, w - 2, h - 2, '.');
    canvas.rect(1 + c, 1 + c, w - 2 - c, h - 2 - c, '#');
    canvas
}

/// Two ring lobes joined through a central vertical corridor.
fn figure_eight_grid(w: usize, h: usize, c: usize) -> Canvas {
    let mut canvas = Canvas::filled(w, h, '#');
    canvas.rect(1, 1, w - 2, h - 2, '.');
    let mid = w / 2;
    // Left and right inner blocks leave a corridor of width c around them
    // and a 2-cell central passage between the lobes.
    canvas.rect(1 + c, 1 + c, mid - 2, h - 2 - c, '#');
    canvas.rect(mid + 1, 1 + c, w - 2 - c, h - 2 - c, '#');
    canvas
}

/// An nx-by-ny grid of rooms with doors in every shared wall: lots of
/// cycles through adjacent rooms.
fn rooms_grid(nx: usize, ny: usize, room: usize) -> Canvas {
    let w = nx * (room + 1) + 1;
    let h = ny * (room + 1) + 1;
    let mut canvas = Canvas::filled(w, h, '#');
    for ry in 0..ny {
        for rx in 0..nx {
            let x0 = rx * (room + 1) + 1;
            let y0 = ry * (room + 1) + 1;
            canvas.rect(x0, y0, x0 + room - 1, y0 + room - 1, '.');
        }
    }
    // Doors at wall midpoints.
    for ry in 0..ny {
        for rx in 0..nx {
            let x0 = rx * (room + 1) + 1;
            let y0 = ry * (room + 1) + 1;
            if rx + 1 < nx {
                canvas.set(x0 + room, y0 + room / 2, '.');
            }
            if ry + 1 < ny {
                canvas.set(x0 + room / 2, y0 + room, '.');
            }
        }
    }
    canvas
}

/// Serpentine corridor with horizontal baffles; `shortcuts` extra openings
/// turn the snake into a braid of loops.
fn serpentine_grid(w: usize, h: usize, gap: usize, shortcuts: usize) -> Canvas {
    let mut canvas = Canvas::filled(w, h, '#');
    canvas.rect(1, 1, w - 2, h - 2, '.');
    let mut row = 1 + gap;
    let mut open_left = true;
    let mut baffles = Vec::new();
    while row < h - 2 {
        for x in 1..=(w - 2) {
            canvas.set(x, row, '#');
        }
        if open_left {
            canvas.set(1, row, '.');
            canvas.set(2, row, '.');
        } else {
            canvas.set(w - 2, row, '.');
            canvas.set(w - 3, row, '.');
        }
        baffles.push(row);
        open_left = !open_left;
        row += gap + 1;
    }
    // Punch shortcut openings mid-baffle, creating cycles.
    for (i, &row) in baffles.iter().enumerate().take(shortcuts) {
        let x = w / 2 + (i % 3);
        canvas.set(x, row, '.');
    }
    canvas
}

fn nth_free(canvas: &Canvas, frac_num: usize, frac_den: usize) -> (usize, usize) {
    let free = canvas.free_cells();
    free[(free.len() * frac_num / frac_den).min(free.len() - 1)]
}

/// A free cell near `target` (Chebyshev distance in [lo, hi]), row-major
/// first match.
fn free_near(canvas: &Canvas, target: (usize, usize), lo: usize, hi: usize) -> Option<(usize, usize)> {
    canvas
        .free_cells()
        .into_iter()
        .find(|&(x, y)| {
            let d = x.abs_diff(target.0).max(y.abs_diff(target.1));
            (lo..=hi).contains(&d)
        })
}

struct WorldPlan {
    name: String,
    canvas: Canvas,
    start: (usize, usize),
    goal: (usize, usize),
    goal_seed: u64,
    objects: Vec<ObjectEntry>,
}

impl WorldPlan {
    fn build(mut self) -> Result<GridWorld> {
        self.canvas.set(self.start.0, self.start.1, 'S');
        self.canvas.set(self.goal.0, self.goal.1, 'G');
        let sidecar = WorldSidecar {
            resolution: 0.25,
            start_heading: 0.0,
            goal: GoalEntry { label: "chair".into(), feature_seed: self.goal_seed },
            objects: self.objects,
        };
        GridWorld::build(self.name, &self.canvas.to_text(), &sidecar)
    }

    fn sidecar(&self) -> WorldSidecar {
        WorldSidecar {
            resolution: 0.25,
            start_heading: 0.0,
            goal: GoalEntry { label: "chair".into(), feature_seed: self.goal_seed },
            objects: self.objects.clone(),
        }
    }
}

fn standard_objects(canvas: &Canvas, goal: (usize, usize), start: (usize, usize), base_seed: u64) -> Vec<ObjectEntry> {
    let mut objects = Vec::new();
    // A same-label distractor instance near the goal: right class, wrong
    // instance.
    if let Some(cell) = free_near(canvas, goal, 4, 9).filter(|&c| c != start && c != goal) {
        objects.push(ObjectEntry {
            label: "chair".into(),
            cell: [cell.0, cell.1],
            feature_seed: base_seed.wrapping_add(1000),
            waypoints: vec![],
        });
    }
    // Clutter of other classes spread over the map.
    for (i, (num, den, label)) in
        [(1usize, 4usize, "table"), (1, 2, "plant"), (3, 4, "lamp")].into_iter().enumerate()
    {
        let cell = nth_free(canvas, num, den);
        if cell != start && cell != goal {
            objects.push(ObjectEntry {
                label: label.into(),
                cell: [cell.0, cell.1],
                feature_seed: base_seed.wrapping_add(2000 + i as u64),
                waypoints: vec![],
            });
        }
    }
    objects
}

fn plan(idx: usize, name: String, canvas: Canvas, start: (usize, usize), goal: (usize, usize)) -> WorldPlan {
    let goal_seed = idx as u64 * 31 + 7;
    let objects = standard_objects(&canvas, goal, start, goal_seed);
    WorldPlan { name, canvas, start, goal, goal_seed, objects }
}

/// The committed 20-world loop-heavy suite.
pub fn bundled_suite() -> Vec<GridWorld> {
    bundled_plans()
        .into_iter()
        .map(|p| p.build().expect("bundled worlds are valid"))
        .collect()
}

fn bundled_plans() -> Vec<WorldPlan> {
    let mut plans = Vec::new();
    let mut idx = 0usize;

    // Rings: start on the bottom band, goal on the top band, half a lap away.
    for (w, h, c) in [(20, 14, 2), (24, 16, 2), (28, 18, 3), (22, 22, 2), (32, 14, 2)] {
        let canvas = ring_grid(w, h, c);
        let start = (2, h - 3);
        let goal = (w - 3, 2);
        plans.push(plan(idx, format!("ring_{w}x{h}"), canvas, start, goal));
        idx += 1;
    }
    // Figure-eights: start in the left lobe, goal in the right lobe.
    for (w, h, c) in [(26, 12, 2), (30, 14, 2), (34, 16, 3), (28, 18, 2), (38, 14, 2)] {
        let canvas = figure_eight_grid(w, h, c);
        let start = (2, h - 3);
        let goal = (w - 3, h - 3);
        plans.push(plan(idx, format!("fig8_{w}x{h}"), canvas, start, goal));
        idx += 1;
    }
    // Room grids: start in the first room, goal in the last.
    for (nx, ny, room) in [(3, 2, 5), (3, 3, 5), (4, 2, 5), (2, 2, 7), (4, 3, 4)] {
        let canvas = rooms_grid(nx, ny, room);
        let start = (2, 2);
        let goal = (canvas.w - 3, canvas.h - 3);
        plans.push(plan(idx, format!("rooms_{nx}x{ny}"), canvas, start, goal));
        idx += 1;
    }
    // Serpentines with shortcuts.
    for (w, h, gap, shortcuts) in [(22, 14, 2, 1), (26, 16, 2, 2), (30, 18, 3, 2), (24, 20, 2, 3), (34, 16, 3, 1)] {
        let canvas = serpentine_grid(w, h, gap, shortcuts);
        let start = (2, 2);
        let goal = (w - 3, h - 3);
        plans.push(plan(idx, format!("serp_{w}x{h}"), canvas, start, goal));
        idx += 1;
    }

    // A moving cart in two worlds exercises velocity tracking in-simulation.
    for k in [1usize, 11] {
        if let Some(p) = plans.get_mut(k) {
            let free = p.canvas.free_cells();
            let a = free[free.len() / 3];
            // Find a free neighbor to shuttle between.
            if let Some(&b) = free
                .iter()
                .find(|&&c| c != a && c.0.abs_diff(a.0) + c.1.abs_diff(a.1) == 1)
            {
                let mut waypoints = Vec::with_capacity(40);
                for t in 0..40 {
                    let c = if (t / 4) % 2 == 0 { a } else { b };
                    waypoints.push([c.0, c.1]);
                }
                p.objects.push(ObjectEntry {
                    label: "cart".into(),
                    cell: [a.0, a.1],
                    feature_seed: 555 + k as u64,
                    waypoints,
                });
            }
        }
    }

    plans
}

/// Writes the bundled suite as `<name>.map` / `<name>.toml` fixture pairs.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for p in bundled_plans() {
        let sidecar = p.sidecar();
        let world = p.build()?;
        std::fs::write(dir.join(format!("{}.map", world.name)), world.to_grid_text())?;
        let toml_text = toml::to_string(&sidecar)
            .map_err(|e| crate::error::Error::Validation(format!("sidecar serialization: {e}")))?;
        std::fs::write(dir.join(format!("{}.toml", world.name)), toml_text)?;
    }
    Ok(())
}

/// Seeded random world for property tests: bordered open room with random
/// rectangular blocks, trimmed until start and goal connect.
pub fn random_world(seed: u64) -> GridWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(16..32usize);
    let h = rng.gen_range(12..24usize);
    let mut canvas = Canvas::filled(w, h, '#');
    canvas.rect(1, 1, w - 2, h - 2, '.');

    let mut blocks: Vec<(usize, usize, usize, usize)> = Vec::new();
    for _ in 0..(w * h / 30) {
        let bw = rng.gen_range(1..4usize);
        let bh = rng.gen_range(1..4usize);
        let x = rng.gen_range(1..w - 1 - bw);
        let y = rng.gen_range(1..h - 1 - bh);
        blocks.push((x, y, bw, bh));
        canvas.rect(x, y, x + bw - 1, y + bh - 1, '#');
    }

    let free = canvas.free_cells();
    let start = free[0];
    let goal = *free.last().expect("room has free cells");

    // Remove blocks in insertion order until the goal is reachable.
    let mut removed = 0usize;
    loop {
        let reachable = octile_shortest_path(
            w,
            h,
            |x, y| {
                x >= 0
                    && y >= 0
                    && (x as usize) < w
                    && (y as usize) < h
                    && canvas.get(x as usize, y as usize) == '.'
            },
            start,
            goal,
        )
        .is_some();
        if reachable {
            break;
        }
        let (x, y, bw, bh) = blocks[removed];
        canvas.rect(x, y, x + bw - 1, y + bh - 1, '.');
        removed += 1;
    }

    let goal_seed = seed.wrapping_mul(13).wrapping_add(5);
    let objects = standard_objects(&canvas, goal, start, goal_seed);
    let p = WorldPlan {
        name: format!("random_{seed}"),
        canvas,
        start,
        goal,
        goal_seed,
        objects,
    };
    p.build().expect("random worlds are valid by construction")
}
