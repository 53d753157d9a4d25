use std::sync::OnceLock;

use super::surface::{Surface, SurfaceHit};
use crate::registry::{Named, Registry};
use crate::Vec3;

/// Finds the surface point nearest the tool tip.
///
/// Every strategy must return the same hit for the same position (ties on
/// the smallest triangle index) so that replays are bit-identical no matter
/// what contact history seeded the search.
pub trait ContactResolver: Named + Send + Sync {
    fn nearest(&self, surface: &Surface, tool: &Vec3, previous_triangle: Option<usize>) -> SurfaceHit;
}

/// Local proxy sliding: searches the one-ring around the previous contact
/// triangle first, then confirms against the tree using that candidate as
/// the pruning bound.
pub struct ProxyResolver;

impl Named for ProxyResolver {
    fn name(&self) -> &'static str {
        "proxy"
    }
}

impl ContactResolver for ProxyResolver {
    fn nearest(&self, surface: &Surface, tool: &Vec3, previous_triangle: Option<usize>) -> SurfaceHit {
        let seed = previous_triangle
            .filter(|&t| t < surface.mesh().triangle_count())
            .map(|t| {
                surface
                    .neighborhood(t)
                    .into_iter()
                    .map(|n| surface.closest_on(n, tool))
                    .reduce(|best, hit| {
                        if hit.distance2 < best.distance2
                            || (hit.distance2 == best.distance2 && hit.triangle < best.triangle)
                        {
                            hit
                        } else {
                            best
                        }
                    })
                    .expect("neighborhood includes the triangle itself")
            });
        surface.nearest(tool, seed)
    }
}

/// Exhaustive scan over every triangle. Reference strategy.
pub struct BruteForceResolver;

impl Named for BruteForceResolver {
    fn name(&self) -> &'static str {
        "brute"
    }
}

impl ContactResolver for BruteForceResolver {
    fn nearest(&self, surface: &Surface, tool: &Vec3, _previous: Option<usize>) -> SurfaceHit {
        surface.nearest_brute(tool)
    }
}

pub fn resolver_registry() -> &'static Registry<dyn ContactResolver> {
    static REGISTRY: OnceLock<Registry<dyn ContactResolver>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn ContactResolver>::new()
            .with(Box::new(ProxyResolver))
            .with(Box::new(BruteForceResolver))
    })
}
