from src.physics.dtr import ConductorSpec, DtrRating, WeatherSample, compute_dtr, dtr_series
from src.physics.solar import compute_solar_cf, plane_of_array_irradiance, sun_elevation
from src.physics.wind import PowerCurve, compute_wind_cf, load_power_curve
from src.physics.weather_io import cell_coordinates, cell_series, read_weather_grid, samples_by_cell
from src.physics.zones import reduce_zones
