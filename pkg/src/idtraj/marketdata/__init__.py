"""Trade ingestion, price grids and synthetic markets."""

from .grid import (
    GridSpec,
    GridStore,
    FundamentalRow,
    PriceGrid,
    ProductPanel,
    TradeRecord,
    aggregate_vwap,
    build_price_grid,
)
from .io import (
    fmt,
    ingest,
    load_store,
    read_da_prices_csv,
    read_fundamentals_csv,
    read_trades_csv,
    save_store,
    write_raw_csvs,
)
from .synthetic import (
    MarketTruth,
    SyntheticConfig,
    generate_synthetic_market,
    make_truth,
    render_trades,
)

__all__ = [
    "GridSpec", "GridStore", "FundamentalRow", "PriceGrid", "ProductPanel", "TradeRecord",
    "aggregate_vwap", "build_price_grid", "fmt", "ingest", "load_store",
    "read_da_prices_csv", "read_fundamentals_csv", "read_trades_csv", "save_store",
    "write_raw_csvs", "MarketTruth", "SyntheticConfig", "generate_synthetic_market",
    "make_truth", "render_trades",
]
