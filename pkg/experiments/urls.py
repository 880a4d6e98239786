from django.urls import path

from . import views

app_name = 'experiments'

urlpatterns = [
    path('runs/', views.run_list, name='run_list'),
    path('runs/<int:run_id>/', views.run_detail, name='run_detail'),
]
