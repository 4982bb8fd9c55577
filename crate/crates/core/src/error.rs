use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must be at least 2x2 to have intersections, got {width}x{height}")]
    DegenerateGrid { width: usize, height: usize },

    #[error("edge length must be positive, got {0}")]
    InvalidEdgeLength(f64),

    #[error("cannot place {requested} vehicles: network capacity is {capacity}")]
    CapacityExceeded { requested: usize, capacity: usize },

    #[error("could not find a collision-free position for vehicle {0}")]
    PlacementFailed(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
